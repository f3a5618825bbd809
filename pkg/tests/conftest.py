"""Shared fixtures.

Two reference models are used throughout:

F1 -- single class, lam = mu = 1, unit variances, tilde_mu = 1, D = 2,
      hbar = 1, rbar = 0.5.  Everything is computable by hand:
      y = -1, s1 = s2 = 1/2, s = 1/4, r = 1/2, h(w) = w, beta0 = 1/4,
      V(x) = (x + ((1-4x)^{3/2} - 1)/6)/2 on [0, beta0],
      tau*(x) = (1 - sqrt(1-4x))/2.

F2 -- two classes, lam = (0.5, 1), mu = (1, 2), hbar = (3, 1),
      rbar = (1, 1), tilde_mu = (3, 3), D = (1, 1), unit variances.
      theta = (1, 1/2), D = 3/2, y = -9/4, s1 = s2 = 2/3, s = 1/3,
      r = 1 at class index 0, h has breakpoint at 1/2 with slopes 2
      then 3, beta0 = h^{-1}(3/2) = 2/3.
"""

import numpy as np
import pytest

from mdqueue.game import solve_game
from mdqueue.model import ClassParams, ModelParams
from mdqueue.paths import PLPath


def make_f1(**overrides):
    cls = dict(lam=1.0, mu=1.0, var_ia=1.0, var_st=1.0, tilde_lam=0.0,
               tilde_mu=1.0, D=2.0, hbar=1.0, rbar=0.5)
    cls.update({k: v for k, v in overrides.items() if k in cls})
    x0 = overrides.get("x0", (0.1,))
    return ModelParams(classes=(ClassParams(**cls),), x0=x0)


def make_f2(x0=(0.45, 0.7)):
    c1 = ClassParams(lam=0.5, mu=1.0, var_ia=1.0, var_st=1.0,
                     tilde_mu=3.0, D=1.0, hbar=3.0, rbar=1.0)
    c2 = ClassParams(lam=1.0, mu=2.0, var_ia=1.0, var_st=1.0,
                     tilde_mu=3.0, D=1.0, hbar=1.0, rbar=1.0)
    return ModelParams(classes=(c1, c2), x0=x0)


def f1_value(x):
    """Closed-form antiderivative of 2s(-y - sqrt(y^2 - h(u)/s)) for F1."""
    beta0 = 0.25
    if x <= beta0:
        return 0.5 * (x + ((1.0 - 4.0 * x) ** 1.5 - 1.0) / 6.0)
    return f1_value(beta0) + 0.5 * (x - beta0)


def f1_tau_star(x):
    return (1.0 - np.sqrt(1.0 - 4.0 * x)) / 2.0


def random_plpath(rng, T=1.0, n_knots=None, lo=-1.0, hi=1.0):
    """Random piecewise-linear path on [0, T] anchored at 0."""
    k = int(n_knots if n_knots is not None else rng.integers(1, 9))
    t = np.sort(rng.uniform(0.0, T, size=k))
    t = np.unique(np.concatenate(([0.0], t, [T])))
    v = rng.uniform(lo, hi, size=len(t))
    v[0] = 0.0
    return PLPath(tuple(t), tuple(v))


def check_reflection_suite(n_paths, seed, a=0.0, b=1.0):
    """Batch property check of the reflection map on random inputs.

    Returns the worst violation seen for each property; the caller asserts
    against its own tolerances.  Inputs live on [0, 1] with values straying
    well outside [a, b] so both boundaries are exercised.
    """
    from mdqueue.paths import lipschitz_probe, skorohod_map

    rng = np.random.default_rng(np.random.SeedSequence([seed, 3]))
    worst = {"constraint": 0.0, "decomposition": 0.0, "complementarity": 0.0,
             "restart": 0.0, "lipschitz": 0.0}
    for _ in range(n_paths):
        omega = random_plpath(rng, T=1.0, lo=a - 0.75, hi=b + 0.75)
        trip = skorohod_map(omega, a, b)
        phi, e1, e2 = trip.phi, trip.eta1, trip.eta2

        worst["constraint"] = max(worst["constraint"],
                                  float(np.max(phi.v) - b), float(a - np.min(phi.v)))

        om = omega.refine(phi.t)
        recon = np.abs(phi.v - (om(phi.t) + e1.v - e2.v))
        worst["decomposition"] = max(worst["decomposition"], float(np.max(recon)))

        for eta, bound in ((e1, a), (e2, b)):
            inc = np.diff(eta.v)
            assert np.all(inc >= 0.0), "pushing process must be nondecreasing"
            grow = inc > 1e-12
            if np.any(grow):
                off = np.abs(phi.v - bound)
                seg_off = np.maximum(off[:-1], off[1:])[grow]
                worst["complementarity"] = max(worst["complementarity"],
                                               float(np.max(seg_off)))

        # causality: restart from the reflected state mid-way, increments of
        # omega as the new input, and the tail of the solution must reappear
        s = float(rng.uniform(0.15, 0.85))
        tail_in = omega.restrict(1.0, s).shift_values(phi(s) - omega(s))
        trip2 = skorohod_map(tail_in, a, b)
        grid = np.union1d(phi.t[phi.t >= s], trip2.phi.t)
        d = max(float(np.max(np.abs(trip2.phi(grid) - phi(grid)))),
                float(np.max(np.abs(trip2.eta1(grid) - (e1(grid) - e1(s))))),
                float(np.max(np.abs(trip2.eta2(grid) - (e2(grid) - e2(s))))))
        worst["restart"] = max(worst["restart"], d)

        other = random_plpath(rng, T=1.0, lo=a - 0.75, hi=b + 0.75)
        worst["lipschitz"] = max(worst["lipschitz"],
                                 lipschitz_probe(omega, other, a, b))
    return worst


@pytest.fixture(scope="session")
def f1():
    return make_f1()


@pytest.fixture(scope="session")
def f2():
    return make_f2()


@pytest.fixture(scope="session")
def f1_sol(f1):
    return solve_game(f1, 0.25)


@pytest.fixture(scope="session")
def f2_sol(f2):
    return solve_game(f2, 0.1)
