"""Workload geometry: the curve gamma, its interior approximation gamma^a,
the effective holding cost h, and the rejection constant r.

With classes labeled so hbar_1*mu_1 >= ... >= hbar_I*mu_I, the cheapest way
to hold workload w is to fill buffers from class I downward; h(w) is the
resulting holding cost, piecewise linear and convex with breakpoints at the
partial sums hatD_j = sum_{i>j} theta_i D_i.
"""

from dataclasses import dataclass, replace

import numpy as np


@dataclass(frozen=True)
class WorkloadGeometry:
    theta: np.ndarray
    Dbar: np.ndarray      # per-class buffer sizes D_i
    D: float              # total scaled workload theta . Dbar
    hatD: np.ndarray      # hatD[j] = sum_{i>j} theta_i D_i, j = 0..I
    hbar: np.ndarray
    istar: int            # 0-based index attaining min rbar_i mu_i
    r: float
    eps0: float
    a: np.ndarray         # a_i = D_i - 3*eps0
    hat_a: np.ndarray
    astar: float          # min(beta0, theta . a); theta . a until a game is solved

    @property
    def I(self):
        return len(self.theta)

    # -- holding cost ------------------------------------------------------

    def _segment(self, w, cuts):
        """Index j with cuts[j] <= w < cuts[j-1]; cuts[I]=0 <...< cuts[0]."""
        I = self.I
        if w >= cuts[0]:
            return 1
        for j in range(I, 0, -1):
            if w < cuts[j - 1]:
                return j
        raise AssertionError("unreachable")

    def _check_range(self, w, hi, what):
        if not (-1e-12 <= w <= hi + 1e-12):
            raise ValueError(f"{what} outside [0, {hi}]")
        return min(max(w, 0.0), hi)

    def gamma(self, w):
        """Cheapest buffer configuration with workload w (greedy fill)."""
        w = self._check_range(w, self.D, "workload")
        j = self._segment(w, self.hatD)
        out = np.zeros(self.I)
        out[j:] = self.Dbar[j:]
        out[j - 1] = (w - self.hatD[j]) / self.theta[j - 1]
        return out

    def h(self, w):
        w = self._check_range(w, self.D, "workload")
        j = self._segment(w, self.hatD)
        full = float(np.dot(self.hbar[j:], self.Dbar[j:]))
        return full + self.hbar[j - 1] * (w - self.hatD[j]) / self.theta[j - 1]

    def h_of(self, w):
        """Vectorized h."""
        return np.array([self.h(x) for x in np.atleast_1d(np.asarray(w, dtype=float))])

    def h_inverse(self, v):
        hD = self.h(self.D)
        v = self._check_range(v, hD, "cost rate")
        # cost at breakpoints, increasing as j runs I..0
        for j in range(self.I, 0, -1):
            lo = float(np.dot(self.hbar[j:], self.Dbar[j:]))
            hi = lo + self.hbar[j - 1] * self.Dbar[j - 1]
            if v <= hi + 1e-15 * max(1.0, hi):
                return self.hatD[j] + (v - lo) * self.theta[j - 1] / self.hbar[j - 1]
        raise AssertionError("unreachable")

    def h_breakpoints(self):
        """Interior breakpoints of h, ascending."""
        return np.sort(self.hatD[1:-1]) if self.I > 1 else np.zeros(0)

    # -- interior curve ----------------------------------------------------

    def gamma_a(self, w):
        w = self._check_range(w, self.D, "workload")
        ta = self.hat_a[0]
        if w < ta:
            j = self._segment(w, self.hat_a)
            out = np.zeros(self.I)
            out[j:] = self.a[j:]
            out[j - 1] = (w - self.hat_a[j]) / self.theta[j - 1]
            return out
        if self.D == ta:
            return self.a.copy()
        frac = (w - ta) / (self.D - ta)
        return self.a + frac * (self.Dbar - self.a)

    def h_a(self, w):
        w = self._check_range(w, self.hat_a[0], "workload (h_a domain is [0, theta.a])")
        return float(np.dot(self.hbar, self.gamma_a(w)))

    def omega1(self):
        """sup over [0, theta.a] of |h_a - h|; exact since both are PL."""
        ta = self.hat_a[0]
        grid = np.linspace(0.0, ta, 10_000)
        brk = np.concatenate((self.hatD, self.hat_a))
        grid = np.union1d(grid, brk[(brk >= 0.0) & (brk <= ta)])
        return float(max(abs(self.h_a(w) - self.h(w)) for w in grid))


def derive_geometry(params, eps0):
    """Build the geometry for a validated model and curve parameter eps0.

    astar is provisionally theta.a here; solving the game caps it at beta0.
    """
    theta = params.theta
    Dbar = np.array([c.D for c in params.classes])
    hbar = np.array([c.hbar for c in params.classes])
    if not 0.0 < eps0 < float(np.min(Dbar)) / 4.0:
        raise ValueError("eps0 must lie in (0, min_i D_i / 4)")
    rb_mu = np.array([c.rbar * c.mu for c in params.classes])
    istar = int(np.argmin(rb_mu))  # argmin takes the smallest index on ties
    a = Dbar - 3.0 * eps0

    def tail_sums(per_class):
        # out[j] = sum_{i>j} theta_i per_class_i (1-based j in 0..I)
        return np.concatenate((np.cumsum((theta * per_class)[::-1])[::-1], [0.0]))

    hatD = tail_sums(Dbar)
    hat_a = tail_sums(a)
    return WorkloadGeometry(
        theta=theta,
        Dbar=Dbar,
        D=float(hatD[0]),
        hatD=hatD,
        hbar=hbar,
        istar=istar,
        r=float(rb_mu[istar]),
        eps0=float(eps0),
        a=a,
        hat_a=hat_a,
        astar=float(hat_a[0]),
    )


def with_astar(geom, beta0):
    return replace(geom, astar=float(min(beta0, geom.hat_a[0])))
