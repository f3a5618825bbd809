"""Compare the compiled event engine against the pure-Python fallback.

Runs identical seeded replications on both backends, checks the trajectories
agree bit-for-bit, and reports events/second.  Usage:

    python benchmarks/bench_sim.py [n] [T] [reps]
"""

import sys
import time

import numpy as np

from mdqueue.game import solve_game
from mdqueue.model import ClassParams, ModelParams, instantiate
from mdqueue.sim import ACTIVE_BACKEND, ao_policy, run


def f2_params(x0=(0.45, 0.7)):
    return ModelParams(classes=(
        ClassParams(lam=0.5, mu=1.0, var_ia=1.0, var_st=1.0, tilde_mu=3.0,
                    D=1.0, hbar=3.0, rbar=1.0),
        ClassParams(lam=1.0, mu=2.0, var_ia=1.0, var_st=1.0, tilde_mu=3.0,
                    D=1.0, hbar=1.0, rbar=1.0),
    ), x0=x0)


def bench(backend, system, policy, T, reps):
    t0 = time.perf_counter()
    events = 0
    last = None
    for seed in range(reps):
        traj = run(system, policy, T=T, seed=seed, record=True,
                   acc_weight=True, backend=backend)
        events += traj.n_events
        last = traj
    return events, time.perf_counter() - t0, last


def main(argv):
    n = int(argv[1]) if len(argv) > 1 else 1000
    T = float(argv[2]) if len(argv) > 2 else 2.0
    reps = int(argv[3]) if len(argv) > 3 else 50
    params = f2_params()
    sol = solve_game(params, 0.1)
    system = instantiate(params, n)
    policy = ao_policy(system, sol.geometry)

    if ACTIVE_BACKEND != "cython":
        print("compiled backend not available; benchmarking python only")
        ev, dt, _ = bench("python", system, policy, T, reps)
        print(f"python: {ev} events in {dt:.2f} s = {ev/dt/1e6:.2f} M events/s")
        return 0

    results = {}
    for backend in ("cython", "python"):
        ev, dt, last = bench(backend, system, policy, T, reps)
        results[backend] = (ev, dt, last)
        print(f"{backend:>7}: {ev} events in {dt:.2f} s "
              f"= {ev/dt/1e6:.2f} M events/s")

    a, b = results["cython"][2], results["python"][2]
    same = (np.array_equal(a.times, b.times) and np.array_equal(a.X, b.X)
            and a.log_weight == b.log_weight)
    print(f"parity on final replication: {'OK' if same else 'MISMATCH'}")
    speedup = (results["python"][1] / results["python"][0]) / \
              (results["cython"][1] / results["cython"][0])
    print(f"speedup: {speedup:.1f}x")
    return 0 if same else 1


if __name__ == "__main__":
    sys.exit(main(sys.argv))
