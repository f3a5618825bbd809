"""Event logs from the simulator and their MD-scaled views.

Kinds: 0 init, 1 admitted arrival, 2 service completion, 3 forced rejection
(full buffer), 4 overload rejection (threshold), 5 end-of-horizon.  Each
record carries the post-event queue-length vector, so every pathwise
invariant can be replayed from the log alone.
"""

from dataclasses import dataclass, field

import numpy as np

KIND_INIT = 0
KIND_ARRIVAL = 1
KIND_COMPLETION = 2
KIND_REJECT_FORCED = 3
KIND_REJECT_OVERLOAD = 4
KIND_END = 5

KIND_NAMES = {
    KIND_INIT: "init",
    KIND_ARRIVAL: "arrival",
    KIND_COMPLETION: "completion",
    KIND_REJECT_FORCED: "reject-forced",
    KIND_REJECT_OVERLOAD: "reject-overload",
    KIND_END: "end",
}


@dataclass
class Trajectory:
    system: object
    policy: object
    T: float
    times: np.ndarray       # (K,) float64, nondecreasing
    kinds: np.ndarray       # (K,) int8
    classes: np.ndarray     # (K,) int16, -1 for init/end
    X: np.ndarray           # (K, I) int64 post-event queue lengths
    counters: dict          # A, Scomp, Rforced, Roverload -> int64 arrays
    H_T: float
    log_weight: float       # log int_0^T exp(b^2 H) dt, nan if not accumulated
    n_events: int
    backend: str = field(default="")

    @property
    def I(self):
        return self.X.shape[1]

    @property
    def x_tilde(self):
        """MD-scaled queue lengths at each logged event."""
        return self.X / self.system.bsn

    @property
    def x_check(self):
        """Instantaneous scaled workload theta_n . X-tilde per event."""
        return self.x_tilde @ self.system.theta_n

    def r_tilde_total(self):
        rej = self.counters["Rforced"] + self.counters["Roverload"]
        return rej / self.system.bsn

    # -- pathwise invariant replays ---------------------------------------

    def balance_violations(self):
        """Max abs error in X = X0 + A - Scomp - Rforced - Roverload, replayed."""
        I = self.I
        run = {k: np.zeros(I, dtype=np.int64)
               for k in ("A", "Scomp", "Rforced", "Roverload")}
        x = self.system.X0.copy()
        worst = 0
        for k in range(len(self.times)):
            kind, c = int(self.kinds[k]), int(self.classes[k])
            if kind == KIND_ARRIVAL:
                run["A"][c] += 1
                x[c] += 1
            elif kind == KIND_COMPLETION:
                run["Scomp"][c] += 1
                x[c] -= 1
            elif kind == KIND_REJECT_FORCED:
                run["A"][c] += 1
                run["Rforced"][c] += 1
            elif kind == KIND_REJECT_OVERLOAD:
                run["A"][c] += 1
                run["Roverload"][c] += 1
            worst = max(worst, int(np.max(np.abs(x - self.X[k]))))
        for key, arr in run.items():
            worst = max(worst, int(np.max(np.abs(arr - self.counters[key]))))
        return worst

    def buffer_violations(self):
        cap = self.system.cap
        bad = np.sum((self.X < 0) | (self.X > cap[None, :]))
        return int(bad)

    def segment_durations(self):
        """Durations for which each logged state is in force."""
        return np.diff(self.times)

    def time_fraction(self, state_predicate):
        """Fraction of [0, T] during which predicate(X row) holds."""
        if len(self.times) < 2:
            return 0.0
        dur = self.segment_durations()
        flags = np.array([state_predicate(self.X[k]) for k in range(len(dur))])
        total = self.times[-1] - self.times[0]
        return float(np.sum(dur[flags]) / total) if total > 0 else 0.0

    def tracking_deviation_fraction(self, geometry, eps0):
        """Time fraction with max_i |X-tilde_i - gamma^a_i(X-check)| > eps0."""
        if len(self.times) < 2:
            return 0.0
        xt = self.x_tilde
        xc = self.x_check
        dur = self.segment_durations()
        D = geometry.D
        dev = np.empty(len(dur))
        for k in range(len(dur)):
            w = min(max(xc[k], 0.0), D)
            dev[k] = np.max(np.abs(xt[k] - geometry.gamma_a(w)))
        total = self.times[-1] - self.times[0]
        return float(np.sum(dur[dev > eps0]) / total) if total > 0 else 0.0

    def rejection_share(self, class_index):
        """Fraction of all rejected jobs that came from the given class."""
        rej = self.counters["Rforced"] + self.counters["Roverload"]
        total = int(np.sum(rej))
        return 1.0 if total == 0 else float(rej[class_index] / total)
