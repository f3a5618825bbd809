"""Experiment driver: game tabulation, playout checks, simulation runs,
convergence and policy-comparison studies, all emitted as CSV.

Exit codes: 0 success, 2 config or flag errors, 3 numeric failure.
"""

import argparse
import sys
from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np

from . import game as game_mod
from . import model, rscost, sim
from .model import ConfigError
from .paths import PLPath

EXPERIMENTS = ("game-table", "saddle-check", "simulate", "convergence",
               "policy-compare")


@dataclass
class ExperimentSpec:
    config: str
    kind: str
    seed: int = 0
    replications: int = 100
    n_grid: tuple = (100, 1000, 10000)
    out: str = "out.csv"
    horizon: float = None
    eps0: float = None
    x_grid: tuple = None
    include_timestamp: bool = True
    event_log: str = None


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def emit_csv(rows, path, header, include_timestamp=True):
    """Stream rows to a CSV file; floats in round-trip decimal form."""
    with open(path, "w", encoding="utf-8") as f:
        if include_timestamp:
            stamp = datetime.now(timezone.utc).isoformat()
            f.write(f"# generated {stamp}\n")
        f.write(",".join(header) + "\n")
        for row in rows:
            f.write(",".join(_fmt(v) for v in row) + "\n")


def _solve(params, eps0):
    if eps0 is None:
        eps0 = float(min(c.D for c in params.classes)) / 8.0
    return game_mod.solve_game(params, eps0), eps0


def _horizon(spec, sol):
    if spec.horizon is not None:
        return float(spec.horizon)
    if not sol.finite:
        raise ArithmeticError("game value is infinite; pass --horizon explicitly")
    return sol.default_horizon()


def _x_grid(spec, sol):
    if spec.x_grid is not None:
        return np.asarray(spec.x_grid, dtype=float)
    return np.linspace(0.0, sol.geometry.D, 101)


def _policies(system, sol):
    return (sim.ao_policy(system, sol.geometry),
            sim.baseline_policy("static-priority", system),
            sim.baseline_policy("full-buffer-reject-only", system))


def run_experiment(spec):
    """Execute one experiment; returns the number of CSV rows written."""
    params = model.load_config(spec.config)
    report = model.validate(params)
    if not report.ok:
        msgs = "; ".join(f"{n}: {d}" for n, d in report.failures())
        raise ConfigError(f"invalid model: {msgs}")
    sol, eps0 = _solve(params, spec.eps0)
    kind = spec.kind
    count = 0

    def counting(rows):
        nonlocal count
        for row in rows:
            count += 1
            yield row

    if kind == "game-table":
        xs = (_x_grid(spec, sol) if sol.finite
              else (spec.x_grid if spec.x_grid is not None else [0.0]))

        def rows():
            for x in xs:
                if sol.finite:
                    yield (float(x), sol.V(float(x)), sol.beta0, True)
                else:
                    yield (float(x), float("nan"), float("nan"), False)

        emit_csv(counting(rows()), spec.out, ("x", "V", "beta0", "finite"),
                 spec.include_timestamp)
        return count

    if kind == "saddle-check":
        if not sol.finite:
            raise ArithmeticError("saddle-check needs a finite game")
        T_fam = _horizon(spec, sol)
        xs = (np.asarray(spec.x_grid, dtype=float) if spec.x_grid is not None
              else np.array([0.25, 0.5, 0.8]) * sol.beta0)
        T_grid = np.linspace(0.0, T_fam, 51)[1:]
        rng_seed = spec.seed

        def rows():
            for x in xs:
                x = float(x)
                fam = game_mod.random_path_family(sol, T_fam, 200, rng_seed)
                fam.append(sol.psi_sharp(T_fam))
                fam.append((PLPath([0.0, T_fam], [0.0, 0.0]),
                            PLPath([0.0, T_fam], [0.0, 0.0])))
                cost_star = float("nan")
                if x < sol.beta0:
                    psi, tau = sol.psi_star(x)
                    fam.append(psi)
                    play = sol.barrier_strategy(sol.beta0, psi, x)
                    cost_star = sol.cost(play, min(tau, play.T))
                sup = sol.playout_sup(x, sol.beta0, fam, T_grid)
                yield (x, sol.V(x), cost_star, sup, len(fam))

        emit_csv(counting(rows()), spec.out,
                 ("x", "V", "cost_psi_star", "playout_sup", "family_size"),
                 spec.include_timestamp)
        return count

    # simulation experiments need an n
    if kind == "simulate":
        n = int(spec.n_grid[-1])
        system = model.instantiate(params, n)
        T = _horizon(spec, sol)
        policy = sim.ao_policy(system, sol.geometry)
        traj = sim.run(system, policy, T, spec.seed, record=True)
        track = traj.tracking_deviation_fraction(sol.geometry, eps0)
        share = traj.rejection_share(sol.geometry.istar)

        def rows():
            for i in range(system.I):
                yield (n, policy.name, T, spec.seed, i + 1,
                       int(traj.counters["A"][i]), int(traj.counters["Scomp"][i]),
                       int(traj.counters["Rforced"][i]),
                       int(traj.counters["Roverload"][i]),
                       int(traj.X[-1, i]) if len(traj.times) else -1,
                       traj.n_events, track, share)

        emit_csv(counting(rows()), spec.out,
                 ("n", "policy", "T", "seed", "class", "arrivals", "completions",
                  "rejected_forced", "rejected_overload", "X_end", "events",
                  "tracking_dev_frac", "istar_rejection_share"),
                 spec.include_timestamp)
        if spec.event_log:
            emit_event_log(traj, spec.event_log, spec.include_timestamp)
        return count

    if kind in ("convergence", "policy-compare"):
        if not sol.finite:
            raise ArithmeticError(f"{kind} needs a finite game")
        T = _horizon(spec, sol)
        x0_workload = float(np.dot(params.theta, np.asarray(params.x0)))
        v_ref = sol.V(min(x0_workload, sol.geometry.D))
        M = spec.replications

        def rows():
            for n in spec.n_grid:
                system = model.instantiate(params, int(n))
                pols = (_policies(system, sol) if kind == "policy-compare"
                        else (sim.ao_policy(system, sol.geometry),))
                for policy in pols:
                    est = rscost.estimate_Jn(system, policy, T, M, spec.seed)
                    yield (int(n), system.b_n, policy.name, T, M, est.value,
                           est.ess, est.heavy_tail, v_ref)

        emit_csv(counting(rows()), spec.out,
                 ("n", "b_n", "policy", "T", "M", "value", "ess", "heavy_tail",
                  "v_ref"),
                 spec.include_timestamp)
        return count

    raise ConfigError(f"unknown experiment kind {kind!r}")


def emit_event_log(traj, path, include_timestamp=True):
    header = ["time", "kind", "class"] + [f"X{i+1}" for i in range(traj.I)]

    def rows():
        for k in range(len(traj.times)):
            yield ([traj.times[k], sim.KIND_NAMES[int(traj.kinds[k])],
                    int(traj.classes[k]) + 1] + [int(v) for v in traj.X[k]])

    emit_csv(rows(), path, header, include_timestamp)


def _parse_int_list(text):
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated ints: {text!r}")


def _parse_float_list(text):
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated reals: {text!r}")


def _parse_bool(text):
    low = text.strip().lower()
    if low in ("true", "1", "yes"):
        return True
    if low in ("false", "0", "no"):
        return False
    raise argparse.ArgumentTypeError(f"expected true/false: {text!r}")


def build_parser():
    p = argparse.ArgumentParser(
        prog="mdqueue",
        description="Differential-game solver and queue simulator for "
                    "risk-sensitive control in the moderate-deviation regime.")
    p.add_argument("--config", required=True, help="model config JSON")
    p.add_argument("--experiment", choices=EXPERIMENTS, default="game-table")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--replications", type=int, default=100, metavar="M")
    p.add_argument("--n-grid", type=_parse_int_list, default=(100, 1000, 10000))
    p.add_argument("--out", default="out.csv")
    p.add_argument("--horizon", type=float, default=None, metavar="T")
    p.add_argument("--eps0", type=float, default=None)
    p.add_argument("--x-grid", type=_parse_float_list, default=None)
    p.add_argument("--include-timestamp", type=_parse_bool, default=True,
                   metavar="BOOL")
    p.add_argument("--event-log", default=None, metavar="PATH")
    return p


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0] == "game":  # subcommand alias for the game table
        argv = ["--experiment", "game-table"] + argv[1:]
    args = build_parser().parse_args(argv)
    spec = ExperimentSpec(
        config=args.config, kind=args.experiment, seed=args.seed,
        replications=args.replications, n_grid=args.n_grid, out=args.out,
        horizon=args.horizon, eps0=args.eps0, x_grid=args.x_grid,
        include_timestamp=args.include_timestamp, event_log=args.event_log)
    try:
        rows = run_experiment(spec)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ArithmeticError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    print(f"wrote {rows} rows to {spec.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
