"""The one-dimensional differential game for the scaled workload.

State follows phi = x + y*t + psi1 - psi2 + zeta - rho, kept in [0, D].  The
maximizer picks drift perturbations (psi1, psi2) and pays the quadratic rate
s1*int(psi1')^2 + s2*int(psi2')^2; the minimizer holds the state down with
rejections rho (cost r per unit) and idling zeta.  When -y >= r/(4s) the game
has finite value

    V(x) = int_0^{x ^ beta0} 2s(-y - sqrt(y^2 - h(u)/s)) du,   slope r above,

with the free boundary beta0 = h^{-1}(-r^2/(4s) - r*y) capped at D.  The
beta0-barrier strategy (two-sided reflection of the free dynamics into
[0, beta0]) is optimal, and the maximizer's best reply from x <= beta0 drives
the state to zero along phi' = -sqrt(y^2 - h(phi)/s).
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .paths import PLPath, skorohod_map
from .workload import derive_geometry, with_astar


# ---------------------------------------------------------------------------
# quadratic rate functionals

def _check_anchored(path):
    if abs(path.v[0]) > 1e-12 or abs(path.t[0]) > 1e-12:
        raise ValueError("rate functionals need paths anchored at (0, 0)")


def rate_quadratic(paths, weights, T):
    """sum_i w_i * int_0^T (dpath_i/dt)^2 dt, exact for PL paths."""
    total = 0.0
    for p, w in zip(paths, weights):
        _check_anchored(p)
        if p.end_time < T - 1e-12:
            raise ValueError("path domain shorter than T")
        q = p.restrict(min(T, p.end_time)) if T < p.end_time else p
        total += w * float(np.sum(q.slopes() ** 2 * np.diff(q.t)))
    return total


def rate_I(psi1, psi2, s1, s2, T):
    return rate_quadratic((psi1, psi2), (s1, s2), T)


def rate_J(paths, weights, T):
    if len(paths) != len(weights):
        raise ValueError("one weight per path")
    return rate_quadratic(paths, weights, T)


def decompose(psi, alpha, l, theta, T=None):
    """Optimal split of a workload-level perturbation into per-class ones.

    Returns the I-tuple psibar_i(u) = (theta_i l_i / alpha_i) C^{-1} psi(u/l_i)
    for u <= l_i T, frozen afterwards, with C = sum_k theta_k^2 l_k / alpha_k.
    It satisfies sum_i theta_i psibar_i(l_i t) = psi(t) and attains
    sum_i alpha_i int (psibar_i')^2 = C^{-1} int (psi')^2.
    """
    _check_anchored(psi)
    alpha = np.asarray(alpha, dtype=float)
    l = np.asarray(l, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if np.any(l <= 0) or np.any(l > 1):
        raise ValueError("speeds l_i must lie in (0, 1]")
    if T is None:
        T = psi.end_time
    C = float(np.sum(theta ** 2 * l / alpha))
    out = []
    for i in range(len(theta)):
        coef = theta[i] * l[i] / (alpha[i] * C)
        t = l[i] * psi.t
        v = coef * psi.v
        if t[-1] < T - 1e-15 * max(1.0, T):
            t = np.concatenate((t, [T]))
            v = np.concatenate((v, [v[-1]]))
        out.append(PLPath(t, v))
    return tuple(out)


# ---------------------------------------------------------------------------
# plays

@dataclass
class GamePlay:
    x: float
    psi1: PLPath
    psi2: PLPath
    zeta: PLPath
    rho: PLPath
    phi: PLPath
    T: float


# ---------------------------------------------------------------------------
# solution

class GameSolution:
    """Solved game for one model: constants, free boundary, V, strategies."""

    def __init__(self, params, geometry, y, s1, s2, finite, beta0):
        self.params = params
        self.geometry = geometry
        self.y = y
        self.s1 = s1
        self.s2 = s2
        self.s = 1.0 / (1.0 / s1 + 1.0 / s2)
        self.r = geometry.r
        self.istar = geometry.istar
        self.finite = finite
        self.beta0 = beta0
        self._V_beta0 = None

    # -- value function ----------------------------------------------------

    def _require_finite(self):
        if not self.finite:
            raise ValueError("game value is infinite (-y < r/(4s))")

    def sqrt_radicand(self, u):
        """sqrt(y^2 - h(u)/s), clamped at 0 against rounding."""
        rad = self.y * self.y - self.geometry.h(u) / self.s
        return math.sqrt(max(rad, 0.0))

    def V_prime(self, w):
        """Right derivative of V; r above beta0, 0 below 0."""
        self._require_finite()
        if w <= 0.0:
            return 0.0
        if w >= self.beta0:
            return self.r
        return 2.0 * self.s * (-self.y - self.sqrt_radicand(w))

    def _V_scalar(self, x):
        g = self.geometry
        if not -1e-12 <= x <= g.D + 1e-12:
            raise ValueError("V is defined on [0, D]")
        x = min(max(x, 0.0), g.D)
        xc = min(x, self.beta0)
        pts = [b for b in g.h_breakpoints() if 0.0 < b < xc]
        val, _ = quad(lambda u: 2.0 * self.s * (-self.y - self.sqrt_radicand(u)),
                      0.0, xc, points=pts or None, limit=200,
                      epsabs=1e-12, epsrel=1e-11)
        if x > self.beta0:
            val += self.r * (x - self.beta0)
        return val

    def V(self, x):
        self._require_finite()
        x = np.asarray(x, dtype=float)
        if x.ndim == 0:
            return self._V_scalar(float(x))
        return np.array([self._V_scalar(v) for v in x])

    # -- maximizer reference paths ----------------------------------------

    def psi_sharp(self, T):
        """Linear pair with slopes r/(2 s1) and -r/(2 s2)."""
        self._require_finite()
        if T <= 0.0:
            return PLPath([0.0], [0.0]), PLPath([0.0], [0.0])
        grid = np.array([0.0, T])
        return (PLPath(grid, grid * (self.r / (2.0 * self.s1))),
                PLPath(grid, grid * (-self.r / (2.0 * self.s2))))

    def tau_star_quadrature(self, x):
        """Hitting-time integral int_0^x (y^2 - h(u)/s)^{-1/2} du."""
        self._require_finite()
        if not 0.0 <= x <= self.beta0:
            raise ValueError("tau* needs x in [0, beta0]")
        if x == 0.0:
            return 0.0
        pts = [b for b in self.geometry.h_breakpoints() if 0.0 < b < x]
        val, _ = quad(lambda u: 1.0 / max(self.sqrt_radicand(u), 1e-300),
                      0.0, x, points=pts or None, limit=200)
        return val

    def psi_star(self, x):
        """Optimal maximizer path from x < beta0: returns ((psi1, psi2), tau).

        Integrates the driven state phi' = -sqrt(y^2 - h(phi)/s) by fixed-step
        RK4 until it hits 0, then maps back to the pair via
        psi* = ((s/s1) w, -(s/s2) w), w(t) = phi(t) - x - y t.
        """
        self._require_finite()
        if not 0.0 <= x < self.beta0:
            raise ValueError("psi* needs 0 <= x < beta0")
        if x == 0.0:
            return (PLPath([0.0], [0.0]), PLPath([0.0], [0.0])), 0.0
        tau_hat = self.tau_star_quadrature(x)
        dt = 1e-4 * tau_hat

        def f(phi):
            return -self.sqrt_radicand(min(max(phi, 0.0), self.geometry.D))

        ts = [0.0]
        phis = [x]
        t, phi = 0.0, x
        max_steps = 100 * 10_000  # the hit comes near tau_hat; this is a guard
        for _ in range(max_steps):
            k1 = f(phi)
            k2 = f(phi + 0.5 * dt * k1)
            k3 = f(phi + 0.5 * dt * k2)
            k4 = f(phi + dt * k3)
            step = (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            phi_new = phi + step
            t_new = t + dt
            if phi_new <= 0.0:
                frac = phi / (phi - phi_new)
                t_hit = t + frac * dt
                if t_hit <= ts[-1]:
                    # phi was already at float-zero scale: frac*dt underflows
                    # below ulp(t), so close the path at the previous knot
                    phis[-1] = 0.0
                else:
                    ts.append(t_hit)
                    phis.append(0.0)
                break
            ts.append(t_new)
            phis.append(phi_new)
            t, phi = t_new, phi_new
        else:
            raise ArithmeticError("psi* integration failed to reach 0")
        ts = np.asarray(ts)
        omega = np.asarray(phis) - x - self.y * ts
        tau = float(ts[-1])
        psi1 = PLPath(ts, (self.s / self.s1) * omega)
        psi2 = PLPath(ts, -(self.s / self.s2) * omega)
        return (psi1, psi2), tau

    # -- minimizer strategy and cost ---------------------------------------

    def free_dynamics(self, x, psi):
        """x + y t + psi1 - psi2 on the union grid of the pair."""
        psi1, psi2 = psi
        grid = np.union1d(psi1.t, psi2.t)
        vals = x + self.y * grid + psi1(grid) - psi2(grid)
        return PLPath(grid, vals)

    def barrier_strategy(self, beta, psi, x):
        """Reflect the free dynamics into [0, beta]: zeta below, rho above."""
        g = self.geometry
        if not 0.0 <= beta <= g.D:
            raise ValueError("barrier level must lie in [0, D]")
        if not 0.0 <= x <= g.D:
            raise ValueError("initial state must lie in [0, D]")
        omega = self.free_dynamics(x, psi)
        ref = skorohod_map(omega, 0.0, beta)
        return GamePlay(x=x, psi1=psi[0], psi2=psi[1],
                        zeta=ref.eta1, rho=ref.eta2, phi=ref.phi,
                        T=omega.end_time)

    def _holding_integral_grid(self, phi):
        """Refine phi at h-breakpoint crossings; returns (t, h(phi(t)))."""
        g = self.geometry
        levels = g.h_breakpoints()
        cross = []
        t, v = phi.t, phi.v
        for k in range(t.size - 1):
            lo, hi = sorted((v[k], v[k + 1]))
            for lev in levels:
                if lo < lev < hi:
                    cross.append(t[k] + (lev - v[k]) / (v[k + 1] - v[k]) * (t[k + 1] - t[k]))
        q = phi.refine(cross) if cross else phi
        hv = np.array([g.h(w) for w in q.v])
        return q.t, hv

    def holding_integral(self, phi, T=None):
        """int_0^T h(phi(t)) dt, exact (trapezoid on the crossing-refined grid)."""
        if T is not None:
            phi = phi.restrict(T)
        t, hv = self._holding_integral_grid(phi)
        return float(np.trapezoid(hv, t))

    def cost(self, play, T=None):
        """Game cost int h(phi) + r rho(T) - I(T, psi)."""
        if T is None:
            T = play.T
        if T <= 0.0:
            return 0.0
        return (self.holding_integral(play.phi, T)
                + self.r * play.rho(T)
                - rate_I(play.psi1, play.psi2, self.s1, self.s2, T))

    def cost_curve(self, play, T_grid):
        """cost(play, T) over a grid of horizons, sharing the refinement."""
        t, hv = self._holding_integral_grid(play.phi)
        cum = np.concatenate(([0.0], np.cumsum(0.5 * (hv[1:] + hv[:-1]) * np.diff(t))))
        out = []
        for T in T_grid:
            if T <= 0.0:
                out.append(0.0)
                continue
            # exact partial segment: trapezoid from the last grid point
            k = int(np.searchsorted(t, T, side="right") - 1)
            k = min(k, t.size - 2)
            part = cum[k]
            if T > t[k]:
                hT = hv[k] + (hv[k + 1] - hv[k]) * (T - t[k]) / (t[k + 1] - t[k])
                part += 0.5 * (hv[k] + hT) * (T - t[k])
            out.append(part + self.r * play.rho(T)
                       - rate_I(play.psi1, play.psi2, self.s1, self.s2, T))
        return np.asarray(out)

    def playout_sup(self, x, level, family, T_grid):
        """max over candidate maximizer pairs and horizons of the barrier cost."""
        if not family:
            raise ValueError("empty path family")
        best = -math.inf
        for psi in family:
            play = self.barrier_strategy(level, psi, x)
            grid = [T for T in T_grid if T <= play.T + 1e-12]
            best = max(best, float(np.max(self.cost_curve(play, grid))))
        return best

    def check_above_barrier(self, x, zeta, rho, delta, T_max=None):
        """Verify that giving up on reaching the barrier does not pay.

        Under psi-sharp and the supplied minimizer controls, the cost accrued
        until the dynamics first cross beta0 + delta must strictly exceed
        r*(x - (beta0 + delta)), provided rho(0) - zeta(0) < x - (beta0+delta).
        Returns (ok, lhs, rhs, tau_delta).
        """
        self._require_finite()
        level = self.beta0 + delta
        if x <= level:
            raise ValueError("need x > beta0 + delta")
        if rho(0.0) - zeta(0.0) >= x - level:
            raise ValueError("minimizer already rejects past the barrier at 0")
        T_end = min(zeta.end_time, rho.end_time)
        if T_max is not None:
            T_end = min(T_end, T_max)
        psi = self.psi_sharp(T_end)
        base = self.free_dynamics(x, psi)
        grid = np.union1d(np.union1d(base.t, zeta.t), rho.t)
        grid = grid[grid <= T_end + 1e-12]
        phi_v = base(grid) + zeta(grid) - rho(grid)
        if np.any(phi_v < -1e-9) or np.any(phi_v > self.geometry.D + 1e-9):
            raise ValueError("dynamics leave [0, D] under the supplied controls")
        phi = PLPath(grid, np.clip(phi_v, 0.0, self.geometry.D))
        # first crossing below the level (exact on the PL path)
        tau = T_end
        for k in range(grid.size - 1):
            if phi_v[k + 1] <= level:
                if phi_v[k + 1] == phi_v[k]:
                    tau = grid[k + 1]
                else:
                    frac = (phi_v[k] - level) / (phi_v[k] - phi_v[k + 1])
                    tau = grid[k] + max(frac, 0.0) * (grid[k + 1] - grid[k])
                break
        lhs = (self.holding_integral(phi, tau) if tau > 0 else 0.0)
        lhs += self.r * rho(tau)
        lhs -= rate_I(psi[0], psi[1], self.s1, self.s2, min(tau, psi[0].end_time))
        rhs = self.r * (x - level)
        return bool(lhs > rhs), float(lhs), float(rhs), float(tau)

    # -- defaults ----------------------------------------------------------

    def default_horizon(self):
        """4*(tau*_{beta0} + crossing time from above + 1), guarded.

        The nominal crossing term D/|y + r/(2s)| blows up when the drift under
        psi-sharp vanishes; fall back to a cost-exhaustion bound in that case.
        """
        self._require_finite()
        g = self.geometry
        drift = self.y + self.r / (2.0 * self.s)
        if self.beta0 >= g.D - 1e-12:
            cross = 0.0
        elif abs(drift) > 1e-12:
            cross = g.D / abs(drift)
        else:
            mid = 0.5 * (self.beta0 + g.D)
            gap = g.h(mid) - g.h(self.beta0)
            cross = (self.V(g.D) + 3.0 + self.r * (2.0 + g.D)) / gap
        return 4.0 * (self.tau_star_quadrature(self.beta0) + cross + 1.0)


def random_path_family(solution, T, count, seed):
    """Random PL maximizer pairs on [0, T] with bounded quadratic rate.

    The scale anchor is the rate of psi-sharp over [0, T]; members are drawn
    with rates spread over (0, that bound], so playouts probe both timid and
    aggressive maximizer behavior.
    """
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 7]))
    bound = solution.r * solution.r / (4.0 * solution.s) * T + 1.0
    fam = []
    for _ in range(count):
        k = int(rng.integers(1, 8))
        grid = np.unique(np.concatenate(([0.0], np.sort(rng.uniform(0.0, T, k)), [T])))
        dv = np.diff(grid)
        v1 = np.concatenate(([0.0], np.cumsum(rng.normal(0.0, 1.0, dv.size) * dv)))
        v2 = np.concatenate(([0.0], np.cumsum(rng.normal(0.0, 1.0, dv.size) * dv)))
        p1 = PLPath(grid, v1)
        p2 = PLPath(grid, v2)
        rate = rate_I(p1, p2, solution.s1, solution.s2, T)
        if rate > 0.0:
            scale = rng.uniform(0.05, 1.0) * math.sqrt(bound / rate)
            p1 = p1.scale(scale)
            p2 = p2.scale(scale)
        fam.append((p1, p2))
    return fam


def game_constants(params):
    """(y, s1, s2) from the model's second-order and variance data."""
    rho = params.rho
    theta = params.theta
    tl = np.array([c.tilde_lam for c in params.classes])
    tm = np.array([c.tilde_mu for c in params.classes])
    mu = np.array([c.mu for c in params.classes])
    via = np.array([c.var_ia for c in params.classes])
    vst = np.array([c.var_st for c in params.classes])
    y = float(np.dot(theta, tl - rho * tm))
    s1 = 1.0 / float(np.sum(2.0 * rho * via / mu))
    s2 = 1.0 / float(np.sum(2.0 * rho * vst / mu))
    return y, s1, s2


def per_class_weights(params):
    """The 2I-tuple weights (s_{i,1}..., s_{i,2}...) for rate_J."""
    w1 = [1.0 / (2.0 * c.lam * c.var_ia) for c in params.classes]
    w2 = [1.0 / (2.0 * c.mu * c.var_st) for c in params.classes]
    return tuple(w1 + w2)


def solve_game(params, eps0):
    """Solve the game; infinite value comes back as finite=False, not an error."""
    geom = derive_geometry(params, eps0)
    y, s1, s2 = game_constants(params)
    s = 1.0 / (1.0 / s1 + 1.0 / s2)
    r = geom.r
    finite = -y >= r / (4.0 * s)
    beta0 = math.nan
    if finite:
        target = -r * r / (4.0 * s) - r * y
        hD = geom.h(geom.D)
        if target <= hD + 1e-15 * max(1.0, hD):
            beta0 = geom.h_inverse(min(max(target, 0.0), hD))
        else:
            beta0 = geom.D
        geom = with_astar(geom, beta0)
    return GameSolution(params, geom, y, s1, s2, finite, beta0)
