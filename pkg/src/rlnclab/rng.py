"""Seeded random streams with keyed, independent substreams.

A stream is identified by a master seed plus a spawn key.  Monte Carlo trials
are grouped into fixed-size blocks and block ``b`` always draws from the
substream keyed ``(b,)``, so the numbers a trial sees never depend on how many
workers ran the simulation.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

__all__ = ["RandomStream"]


class RandomStream:
    """Single-owner wrapper around a PCG64 generator.

    ``integers`` relies on numpy's bounded-integer sampler, which rejects
    out-of-range words instead of reducing modulo the bound, so every value in
    ``[0, n)`` has probability exactly ``1/n``.
    """

    def __init__(self, seed: int, key: tuple[int, ...] = ()):
        self.seed = int(seed)
        self.key = tuple(int(k) for k in key)
        seq = np.random.SeedSequence(self.seed, spawn_key=self.key)
        self._gen = np.random.Generator(np.random.PCG64(seq))

    def substream(self, *key: int) -> RandomStream:
        return RandomStream(self.seed, self.key + key)

    def integers(self, n: int, size=None):
        if size is None:
            return int(self._gen.integers(0, n))
        return self._gen.integers(0, n, size=size, dtype=np.int64)

    def bernoulli(self, p: Fraction, size) -> np.ndarray:
        """Exact Bernoulli(p) draws for rational ``p``: ``U{0..den-1} < num``."""
        p = Fraction(p)
        if p == 0:
            return np.zeros(size, dtype=bool)
        if p == 1:
            return np.ones(size, dtype=bool)
        return self._gen.integers(0, p.denominator, size=size, dtype=np.int64) < p.numerator

    def __repr__(self) -> str:
        return f"RandomStream(seed={self.seed}, key={self.key})"
