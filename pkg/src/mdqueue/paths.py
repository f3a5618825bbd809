"""Piecewise-linear paths and the two-sided reflection (Skorohod) map on [a, b].

Paths are stored as a strictly increasing time grid plus values, linear in
between.  All operations here are exact for piecewise-linear inputs: the
reflection map is built event by event with analytic boundary crossings, so
the only error anywhere is float rounding.
"""

import numpy as np


def _as_grid(t, v):
    t = np.asarray(t, dtype=float)
    v = np.asarray(v, dtype=float)
    if t.ndim != 1 or v.shape != t.shape or t.size == 0:
        raise ValueError("grid and values must be 1-d arrays of equal nonzero length")
    if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v))):
        raise ValueError("grid and values must be finite")
    if t.size > 1 and not np.all(np.diff(t) > 0):
        raise ValueError("grid must be strictly increasing")
    return t, v


class PLPath:
    """A continuous piecewise-linear function on [t_0, t_K]."""

    __slots__ = ("t", "v")

    def __init__(self, t, v):
        self.t, self.v = _as_grid(t, v)

    @property
    def t0(self):
        return float(self.t[0])

    @property
    def end_time(self):
        return float(self.t[-1])

    def __call__(self, times):
        times = np.asarray(times, dtype=float)
        scalar = times.ndim == 0
        times = np.atleast_1d(times)
        lo, hi = self.t[0], self.t[-1]
        # forgive pure rounding noise at the ends, nothing more
        slack = 1e-12 * max(1.0, abs(lo), abs(hi))
        if np.any(times < lo - slack) or np.any(times > hi + slack):
            raise ValueError("evaluation outside the path domain")
        out = np.interp(np.clip(times, lo, hi), self.t, self.v)
        return float(out[0]) if scalar else out

    def slopes(self):
        if self.t.size == 1:
            return np.zeros(0)
        return np.diff(self.v) / np.diff(self.t)

    def refine(self, extra):
        """Same function, grid enlarged by the given points (clipped to domain)."""
        extra = np.asarray(extra, dtype=float)
        extra = extra[(extra >= self.t[0]) & (extra <= self.t[-1])]
        grid = np.union1d(self.t, extra)
        return PLPath(grid, self(grid))

    def restrict(self, t_hi, t_lo=None):
        if t_lo is None:
            t_lo = self.t[0]
        if not (self.t[0] - 1e-12 <= t_lo < t_hi <= self.t[-1] + 1e-12):
            raise ValueError("restriction window outside the path domain")
        t_lo = max(t_lo, float(self.t[0]))
        t_hi = min(t_hi, float(self.t[-1]))
        inner = self.t[(self.t > t_lo) & (self.t < t_hi)]
        grid = np.concatenate(([t_lo], inner, [t_hi]))
        return PLPath(grid, self(grid))

    def shift_values(self, c):
        return PLPath(self.t, self.v + c)

    def scale(self, c):
        return PLPath(self.t, c * self.v)

    def _binary(self, other, op):
        grid = np.union1d(self.t, other.t)
        if grid[0] < self.t[0] - 1e-12 or grid[-1] > self.t[-1] + 1e-12:
            raise ValueError("paths defined on different domains")
        return PLPath(grid, op(self(grid), other(grid)))

    def __add__(self, other):
        return self._binary(other, np.add)

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __neg__(self):
        return PLPath(self.t, -self.v)

    def is_nondecreasing(self, tol=0.0):
        return self.t.size == 1 or bool(np.all(np.diff(self.v) >= -tol))

    def max_abs(self):
        return float(np.max(np.abs(self.v)))

    @classmethod
    def constant(cls, value, T, t0=0.0):
        if T <= t0:
            return cls([t0], [value])
        return cls([t0, T], [value, value])

    @classmethod
    def from_slopes(cls, t, slopes, v0=0.0):
        """Path through grid t with the given slope on each segment."""
        t = np.asarray(t, dtype=float)
        slopes = np.asarray(slopes, dtype=float)
        v = np.concatenate(([v0], v0 + np.cumsum(slopes * np.diff(t))))
        return cls(t, v)


class ReflectionTriple:
    """Output of the two-sided reflection map: phi = omega + eta1 - eta2."""

    __slots__ = ("phi", "eta1", "eta2")

    def __init__(self, phi, eta1, eta2):
        self.phi = phi
        self.eta1 = eta1
        self.eta2 = eta2


def skorohod_map(omega, a, b):
    """Two-sided reflection of a PL path into [a, b], solved exactly.

    eta1/eta2 use the eta(0-) = 0 convention: omega(0) outside [a, b] shows up
    as a jump at time zero.  Within each input segment the constrained path can
    switch regime (free / pinned) at most once, which the loop resolves
    analytically, inserting the crossing time into the output grid.
    """
    if not a < b:
        raise ValueError("need a < b")
    t_in = omega.t
    v_in = omega.v

    w0 = float(v_in[0])
    y = min(max(w0, a), b)
    e1 = max(a - w0, 0.0)
    e2 = max(w0 - b, 0.0)
    ts = [float(t_in[0])]
    ph = [y]
    g1 = [e1]
    g2 = [e2]

    for k in range(t_in.size - 1):
        t0, t1 = float(t_in[k]), float(t_in[k + 1])
        dt = t1 - t0
        m = (float(v_in[k + 1]) - float(v_in[k])) / dt
        if y <= a and m <= 0.0:
            # pinned at the lower boundary for the whole segment
            e1 += -m * dt
            y = a
        elif y >= b and m >= 0.0:
            e2 += m * dt
            y = b
        else:
            y_end = y + m * dt
            if y_end > b:
                t_hit = t0 + (b - y) / m
                ts.append(t_hit)
                ph.append(b)
                g1.append(e1)
                g2.append(e2)
                e2 += m * (t1 - t_hit)
                y = b
            elif y_end < a:
                t_hit = t0 + (a - y) / m
                ts.append(t_hit)
                ph.append(a)
                g1.append(e1)
                g2.append(e2)
                e1 += -m * (t1 - t_hit)
                y = a
            else:
                y = y_end
        ts.append(t1)
        ph.append(y)
        g1.append(e1)
        g2.append(e2)

    # collapse duplicate times left by zero-length hits at segment ends
    ts = np.asarray(ts)
    keep = np.concatenate(([True], np.diff(ts) > 0))
    ts = ts[keep]
    ph = np.asarray(ph)[keep]
    g1 = np.asarray(g1)[keep]
    g2 = np.asarray(g2)[keep]
    return ReflectionTriple(PLPath(ts, ph), PLPath(ts, g1), PLPath(ts, g2))


def lipschitz_probe(omega, tilde_omega, a, b):
    """Measured sup-norm ratio ||Gamma(w) - Gamma(w~)|| / ||w - w~||, test aid."""
    grid = np.union1d(omega.t, tilde_omega.t)
    r1 = skorohod_map(omega.refine(grid), a, b)
    r2 = skorohod_map(tilde_omega.refine(grid), a, b)
    out = np.union1d(r1.phi.t, r2.phi.t)
    num = 0.0
    for p, q in ((r1.phi, r2.phi), (r1.eta1, r2.eta1), (r1.eta2, r2.eta2)):
        num = max(num, float(np.max(np.abs(p(out) - q(out)))))
    den = float(np.max(np.abs(omega(grid) - tilde_omega(grid))))
    if den == 0.0:
        return 0.0
    return num / den


def osc(path, delta, T):
    """Exact modulus of oscillation sup_{|t-s|<=delta, 0<=s<=t<=T} |f(t)-f(s)|.

    The window sup/inf are piecewise monotone in the window start between
    grid-point alignments, so checking starts in {t_i} union {t_i - delta}
    is exact for piecewise-linear paths.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    p = path.restrict(T)
    t, v = p.t, p.v
    if T <= delta + 1e-15 * max(1.0, T):
        return float(np.max(v) - np.min(v))
    starts = np.unique(np.clip(np.concatenate((t, t - delta)), 0.0, T - delta))
    best = 0.0
    for w in starts:
        hi = w + delta
        inner = v[(t > w) & (t < hi)]
        p_lo, p_hi = p(w), p(hi)
        top = max(p_lo, p_hi, np.max(inner) if inner.size else -np.inf)
        bot = min(p_lo, p_hi, np.min(inner) if inner.size else np.inf)
        best = max(best, top - bot)
    return float(best)
