"""Block-buffered random variate streams for the event engines.

Each (class, kind) pair owns an independent generator seeded from
SeedSequence([*seed_words, class_index, kind]), kind 0 = interarrival,
kind 1 = service.  Variates come out unit-mean, pre-divided by the n-th
system rate, in fixed-size blocks consumed sequentially — so any engine
that takes draws in the same per-stream order reproduces the exact same
trajectory, which is what makes the compiled and pure-Python backends
bit-identical.
"""

import math

import numpy as np

BLOCK = 4096


class VariateStream:
    """One renewal process's scaled increments, drawn in blocks."""

    __slots__ = ("rng", "kind", "var", "scale", "block")

    def __init__(self, seed_seq, kind, var, rate, block=BLOCK):
        self.rng = np.random.default_rng(seed_seq)
        self.kind = kind
        self.var = float(var)
        self.scale = 1.0 / float(rate)
        self.block = block

    def refill(self):
        """Next block of scaled increments (float64, length `block`)."""
        n = self.block
        if self.kind == "exponential":
            v = self.rng.exponential(1.0, n)
        elif self.kind == "uniform":
            c = math.sqrt(3.0 * self.var)
            v = self.rng.uniform(1.0 - c, 1.0 + c, n)
        elif self.kind == "deterministic":
            v = np.ones(n)
        elif self.kind == "gamma":
            k = 1.0 / self.var
            v = self.rng.gamma(k, 1.0 / k, n)
        else:
            raise ValueError(f"unknown distribution kind {self.kind!r}")
        return v * self.scale


def build_streams(system, seed_words):
    """Interleaved [ia_0, st_0, ia_1, st_1, ...] streams for one run."""
    words = [int(w) for w in seed_words]
    if any(w < 0 for w in words):
        raise ValueError("seed words must be nonnegative integers")
    out = []
    for i, c in enumerate(system.params.classes):
        out.append(VariateStream(np.random.SeedSequence(words + [i, 0]),
                                 c.ia_dist, c.var_ia, system.lambda_n[i]))
        out.append(VariateStream(np.random.SeedSequence(words + [i, 1]),
                                 c.st_dist, c.var_st, system.mu_n[i]))
    return out
