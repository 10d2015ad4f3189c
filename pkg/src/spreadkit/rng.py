"""Seeded random streams.

Every randomized routine takes one :class:`SeededRng`.  Sub-procedures never
share their caller's stream; they take ``rng.child(i)`` where ``i`` is the
call ordinal inside the caller.  A stream is identified by the master seed and
the path of ordinals leading to it, so replays are exact regardless of how
many draws the parent made before spawning a child.
"""
from __future__ import annotations

import numpy as np


class SeededRng:
    """A reproducible random stream identified by ``(seed, path)``."""

    __slots__ = ("seed", "path", "gen")

    def __init__(self, seed: int, path: tuple[int, ...] = ()):
        seed = int(seed)
        if seed < 0 or seed >= 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        self.seed = seed
        self.path = tuple(int(p) for p in path)
        ss = np.random.SeedSequence(seed, spawn_key=self.path)
        self.gen = np.random.Generator(np.random.PCG64(ss))

    @property
    def stream(self) -> str:
        return "/".join(str(p) for p in self.path) or "root"

    def child(self, ordinal: int) -> "SeededRng":
        return SeededRng(self.seed, self.path + (ordinal,))

    # thin wrappers around the numpy generator
    def random(self, size=None):
        return self.gen.random(size)

    def integers(self, low, high=None, size=None):
        return self.gen.integers(low, high, size)

    def permutation(self, x):
        return self.gen.permutation(x)

    def choice(self, a, size=None, replace=True, p=None):
        return self.gen.choice(a, size=size, replace=replace, p=p)

    def binomial(self, n, p, size=None):
        return self.gen.binomial(n, p, size)

    def randbelow(self, m: int) -> int:
        return int(self.gen.integers(m))

    def __repr__(self) -> str:
        return f"SeededRng(seed={self.seed}, stream={self.stream})"


def as_rng(rng: "SeededRng | int | None") -> SeededRng:
    if isinstance(rng, SeededRng):
        return rng
    if rng is None:
        return SeededRng(0)
    return SeededRng(int(rng))
