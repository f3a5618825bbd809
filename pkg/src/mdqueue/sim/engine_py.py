"""Pure-Python event engine: the reference implementation.

The compiled backend mirrors this file statement for statement; both consume
the same variate streams in the same order and perform the same float
operations, so their trajectories agree bit for bit (test_sim checks this).
Service follows the potential-service composition S_i(T_i(t)): per-class
renewal epochs are consumed at rate B_i, and progress is preserved across
B_i = 0 stretches.
"""

import math

from . import trajectory as tr
from .policies import AO


class Engine:
    """Steps one n-th system trajectory; immutable inputs, mutable cursor."""

    def __init__(self, system, policy, streams, T, record=True, acc_weight=False):
        I = system.I
        self.I = I
        self.T = float(T)
        self.record = record
        self.acc_weight = acc_weight
        self.bsn = system.bsn
        self.b_sq = system.b_sq
        self.cap = [int(c) for c in system.cap]
        self.hbar = [float(c.hbar) for c in system.params.classes]
        self.rbar = [float(c.rbar) for c in system.params.classes]
        # policy constants (precomputed in job space, shared with the C twin)
        self.code = policy.code
        self.istar = policy.istar
        self.astar_jobs = float(policy.astar) * self.bsn
        self.thresh = [float(v) for v in policy.thresh]
        self.a_jobs = [float(v) * self.bsn for v in policy.a_levels]
        self.rho = [float(v) for v in policy.rho]

        self.streams = streams
        self._bufs = [s.refill() for s in streams]
        self._pos = [0] * len(streams)

        self.t = 0.0
        self.X = [int(v) for v in system.X0]
        self.Tcum = [0.0] * I
        self.A = [0] * I
        self.Sc = [0] * I
        self.Rf = [0] * I
        self.Ro = [0] * I
        self.H = 0.0
        self.run_max = -math.inf
        self.run_sum = 0.0
        self.done = False

        self.next_arr = [self._draw(2 * i) for i in range(I)]
        self.next_epoch = [self._draw(2 * i + 1) for i in range(I)]
        self.B = [0.0] * I
        self._compute_B()

        self.log_t = []
        self.log_kind = []
        self.log_cls = []
        self.log_X = []
        if record:
            self._log(0.0, tr.KIND_INIT, -1)
        if self.T <= 0.0:
            self.done = True

    # -- internals ---------------------------------------------------------

    def _draw(self, si):
        pos = self._pos[si]
        buf = self._bufs[si]
        if pos >= buf.shape[0]:
            buf = self.streams[si].refill()
            self._bufs[si] = buf
            pos = 0
        self._pos[si] = pos + 1
        return float(buf[pos])

    def _log(self, t, kind, cls):
        self.log_t.append(t)
        self.log_kind.append(kind)
        self.log_cls.append(cls)
        self.log_X.append(list(self.X))

    def _compute_B(self):
        I, X, B = self.I, self.X, self.B
        for i in range(I):
            B[i] = 0.0
        if self.code == AO:
            total = 0
            for i in range(I):
                total += X[i]
            if total == 0:
                return
            L = I - 1
            for i in range(I - 1, -1, -1):
                if X[i] < self.a_jobs[i]:
                    L = i
                    break
            srho = 0.0
            for i in range(I):
                if i != L and X[i] > 0:
                    srho += self.rho[i]
            if srho > 0.0:
                for i in range(I):
                    if i != L and X[i] > 0:
                        B[i] = self.rho[i] / srho
            else:
                B[I - 1] = 1.0
        elif self.code == 1:  # static priority
            for i in range(I):
                if X[i] > 0:
                    B[i] = 1.0
                    return
        else:  # full-buffer-reject-only: share proportional to rho
            srho = 0.0
            for i in range(I):
                if X[i] > 0:
                    srho += self.rho[i]
            if srho > 0.0:
                for i in range(I):
                    if X[i] > 0:
                        B[i] = self.rho[i] / srho

    def _rejects_overload(self, i):
        if self.code != AO or i != self.istar:
            return False
        w = 0.0
        for k in range(self.I):
            w += self.thresh[k] * self.X[k]
        return w >= self.astar_jobs

    def _accumulate(self, m, dt):
        c = self.b_sq * m
        if c > 0.0:
            z = c * dt
            if z > 30.0:
                logq = z - math.log(c) + math.log1p(-math.exp(-z))
            else:
                logq = math.log(math.expm1(z) / c)
        else:
            logq = math.log(dt)
        contrib = self.b_sq * self.H + logq
        if contrib > self.run_max:
            self.run_sum = self.run_sum * math.exp(self.run_max - contrib) + 1.0
            self.run_max = contrib
        else:
            self.run_sum += math.exp(contrib - self.run_max)

    # -- stepping ----------------------------------------------------------

    def step(self):
        """Advance past one event; returns (time, kind, class) or None at T."""
        if self.done:
            return None
        I, X, B = self.I, self.X, self.B
        best_t = math.inf
        best_kind = -1
        best_cls = -1
        for i in range(I):
            if B[i] > 0.0:
                rem = self.next_epoch[i] - self.Tcum[i]
                if rem < 0.0:
                    rem = 0.0
                tc = self.t + rem / B[i]
                if tc < best_t:
                    best_t = tc
                    best_kind = tr.KIND_COMPLETION
                    best_cls = i
        for i in range(I):
            if self.next_arr[i] < best_t:
                best_t = self.next_arr[i]
                best_kind = tr.KIND_ARRIVAL
                best_cls = i
        t_next = best_t if best_t < self.T else self.T
        dt = t_next - self.t
        if dt > 0.0:
            hx = 0.0
            for i in range(I):
                hx += self.hbar[i] * X[i]
            m = hx / self.bsn
            if self.acc_weight:
                self._accumulate(m, dt)
            self.H += m * dt
            for i in range(I):
                self.Tcum[i] += B[i] * dt
            self.t = t_next
        if best_t >= self.T:
            if self.record:
                self._log(self.T, tr.KIND_END, -1)
            self.done = True
            return None
        if best_kind == tr.KIND_COMPLETION:
            i = best_cls
            self.Tcum[i] = self.next_epoch[i]  # exact resync, kills drift
            X[i] -= 1
            self.Sc[i] += 1
            self.next_epoch[i] += self._draw(2 * i + 1)
            kind = tr.KIND_COMPLETION
        else:
            i = best_cls
            self.A[i] += 1
            if X[i] >= self.cap[i]:
                self.Rf[i] += 1
                self.H += self.rbar[i] / self.bsn
                kind = tr.KIND_REJECT_FORCED
            elif self._rejects_overload(i):
                self.Ro[i] += 1
                self.H += self.rbar[i] / self.bsn
                kind = tr.KIND_REJECT_OVERLOAD
            else:
                X[i] += 1
                kind = tr.KIND_ARRIVAL
            self.next_arr[i] += self._draw(2 * i)
        if self.record:
            self._log(self.t, kind, best_cls)
        self._compute_B()
        return (self.t, kind, best_cls)

    def run(self):
        while self.step() is not None:
            pass
        return self

    def log_weight(self):
        if not self.acc_weight or self.run_sum == 0.0:
            return math.nan
        return self.run_max + math.log(self.run_sum)
