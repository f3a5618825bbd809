"""Discrete-event simulation of the n-th system under pluggable policies.

Two interchangeable engines: a compiled kernel (built from _engine_c.pyx)
and a pure-Python twin.  Selection happens at import: the compiled one wins
when present unless MDQ_FORCE_PYTHON is set.  Both consume identical variate
streams and produce bit-identical trajectories; `backend=` overrides per call.
"""

import math
import os

import numpy as np

from .engine_py import Engine
from .policies import (AO, FULL_BUFFER, STATIC_PRIORITY, Policy, PolicyDecision,
                       admits, ao_policy, baseline_policy, decide,
                       service_fractions)
from .streams import build_streams
from .trajectory import (KIND_ARRIVAL, KIND_COMPLETION, KIND_END, KIND_INIT,
                         KIND_NAMES, KIND_REJECT_FORCED, KIND_REJECT_OVERLOAD,
                         Trajectory)

_FORCE_PY = os.environ.get("MDQ_FORCE_PYTHON", "") not in ("", "0")
if _FORCE_PY:
    _engine_c = None
else:
    # from-import would latch onto a pre-assigned attribute, so import lazily
    # and only bind the name on success.
    try:
        from . import _engine_c
    except ImportError:
        _engine_c = None
ACTIVE_BACKEND = "cython" if _engine_c is not None else "python"


def simulate_raw(system, policy, streams, T, record=True, acc_weight=False,
                 backend=None):
    """One trajectory through the selected engine; returns the raw result dict."""
    be = backend or ACTIVE_BACKEND
    p = system.params
    hbar = np.array([c.hbar for c in p.classes])
    rbar = np.array([c.rbar for c in p.classes])
    if be == "cython":
        if _engine_c is None:
            raise RuntimeError("compiled backend requested but not available")
        return _engine_c.simulate(
            system.X0, system.cap, hbar, rbar,
            system.bsn, system.b_sq, float(T),
            int(policy.code), int(policy.istar),
            float(policy.astar) * system.bsn,
            np.asarray(policy.thresh, dtype=float),
            np.asarray(policy.a_levels, dtype=float) * system.bsn,
            np.asarray(policy.rho, dtype=float),
            list(streams), bool(record), bool(acc_weight))
    if be != "python":
        raise ValueError(f"unknown backend {be!r}")
    eng = Engine(system, policy, streams, T, record=record,
                 acc_weight=acc_weight).run()
    I = system.I
    return {
        "t": eng.t,
        "X": np.array(eng.X, dtype=np.int64),
        "Tcum": np.array(eng.Tcum),
        "A": np.array(eng.A, dtype=np.int64),
        "Sc": np.array(eng.Sc, dtype=np.int64),
        "Rf": np.array(eng.Rf, dtype=np.int64),
        "Ro": np.array(eng.Ro, dtype=np.int64),
        "H": eng.H,
        "run_max": eng.run_max,
        "run_sum": eng.run_sum,
        "log_t": np.array(eng.log_t, dtype=np.float64),
        "log_kind": np.array(eng.log_kind, dtype=np.int8),
        "log_cls": np.array(eng.log_cls, dtype=np.int16),
        "log_X": (np.array(eng.log_X, dtype=np.int64)
                  if eng.log_X else np.empty((0, I), dtype=np.int64)),
    }


def _to_trajectory(system, policy, T, res, acc_weight, backend):
    lw = math.nan
    if acc_weight and res["run_sum"] > 0.0:
        lw = res["run_max"] + math.log(res["run_sum"])
    counters = {"A": res["A"], "Scomp": res["Sc"],
                "Rforced": res["Rf"], "Roverload": res["Ro"]}
    return Trajectory(
        system=system, policy=policy, T=float(T),
        times=res["log_t"], kinds=res["log_kind"], classes=res["log_cls"],
        X=res["log_X"], counters=counters, H_T=float(res["H"]),
        log_weight=lw,
        n_events=int(np.sum(res["A"]) + np.sum(res["Sc"])),
        backend=backend or ACTIVE_BACKEND)


def run(system, policy, T, seed, record=True, acc_weight=False, backend=None,
        seed_words=None):
    """Simulate [0, T] from a seed; streams derive from (seed, class, kind)."""
    words = seed_words if seed_words is not None else (seed,)
    streams = build_streams(system, words)
    res = simulate_raw(system, policy, streams, T, record=record,
                       acc_weight=acc_weight, backend=backend)
    return _to_trajectory(system, policy, T, res, acc_weight, backend)


def next_event(engine):
    """Stepping interface over the pure-Python engine (tests, inspection)."""
    return engine.step()
