"""Control policies: service-fraction rules plus the overload-rejection switch.

The AO policy serves every occupied class except the tracking class L at
rates proportional to traffic intensity, and rejects class-i* arrivals while
the workload theta . X-tilde sits at or above a*.  Baselines for comparison:
static priority (full rate to the lowest occupied index) and a
full-buffer-reject-only rule (proportional sharing, no overload rejections).
"""

from dataclasses import dataclass

import numpy as np

AO = 0
STATIC_PRIORITY = 1
FULL_BUFFER = 2

_KIND_CODES = {
    "ao": AO,
    "static-priority": STATIC_PRIORITY,
    "full-buffer-reject-only": FULL_BUFFER,
}


@dataclass(frozen=True)
class Policy:
    """Flat numeric parameters, shared verbatim by both engine backends."""

    code: int
    name: str
    istar: int
    astar: float          # workload threshold in scaled units; inf disables
    thresh: np.ndarray    # workload vector for the threshold comparison
    a_levels: np.ndarray  # a_i in scaled units (tracking class search)
    rho: np.ndarray


@dataclass(frozen=True)
class PolicyDecision:
    B: np.ndarray
    admit_istar: bool


def ao_policy(system, geometry, use_theta_n=False):
    """The asymptotically optimal policy for this system and geometry.

    The threshold comparison uses the limit theta by default; use_theta_n
    switches to the n-th system's theta for sensitivity runs.
    """
    thresh = system.theta_n if use_theta_n else geometry.theta
    return Policy(code=AO, name="ao", istar=geometry.istar,
                  astar=float(geometry.astar),
                  thresh=np.asarray(thresh, dtype=float),
                  a_levels=np.asarray(geometry.a, dtype=float),
                  rho=system.params.rho)


def baseline_policy(kind, system):
    if kind not in ("static-priority", "full-buffer-reject-only"):
        raise ValueError(f"unknown baseline policy {kind!r}")
    I = system.I
    return Policy(code=_KIND_CODES[kind], name=kind, istar=0, astar=np.inf,
                  thresh=np.zeros(I), a_levels=np.zeros(I),
                  rho=system.params.rho)


def service_fractions(policy, X, bsn):
    """B given integer queue lengths; the reference decision rule.

    The engines inline this logic; test_sim checks them against this function.
    """
    I = len(X)
    B = np.zeros(I)
    if policy.code == STATIC_PRIORITY:
        for i in range(I):
            if X[i] > 0:
                B[i] = 1.0
                break
        return B
    if policy.code == FULL_BUFFER:
        srho = 0.0
        for i in range(I):
            if X[i] > 0:
                srho += policy.rho[i]
        if srho > 0.0:
            for i in range(I):
                if X[i] > 0:
                    B[i] = policy.rho[i] / srho
        return B
    # AO
    total = 0
    for i in range(I):
        total += X[i]
    if total == 0:
        return B
    L = I - 1
    for i in range(I - 1, -1, -1):
        if X[i] < policy.a_levels[i] * bsn:
            L = i
            break
    srho = 0.0
    for i in range(I):
        if i != L and X[i] > 0:
            srho += policy.rho[i]
    if srho > 0.0:
        for i in range(I):
            if i != L and X[i] > 0:
                B[i] = policy.rho[i] / srho
    else:
        B[I - 1] = 1.0
    return B


def admits(policy, X, bsn):
    """Is a class-i* arrival admitted in this (pre-arrival) state?"""
    if policy.code != AO or not np.isfinite(policy.astar):
        return True
    w = 0.0
    for i in range(len(X)):
        w += policy.thresh[i] * X[i]
    return w < policy.astar * bsn


def decide(policy, X, bsn):
    return PolicyDecision(B=service_fractions(policy, X, bsn),
                          admit_istar=admits(policy, X, bsn))
