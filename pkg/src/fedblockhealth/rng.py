"""Seeded randomness helpers.

Everything random in a run flows from one integer seed. Child streams are
derived with :class:`numpy.random.SeedSequence` so that clients can run in
any order (or in parallel) and still draw the same numbers.
"""
from __future__ import annotations

import numpy as np

_TWO64 = 1 << 64


def make_rng(seed=None) -> np.random.Generator:
    """PCG64 generator; ``seed=None`` draws OS entropy."""
    return np.random.Generator(np.random.PCG64(seed))


def spawn(seed: int, *path: int) -> np.random.Generator:
    """Independent generator addressed by ``seed`` and a spawn path."""
    ss = np.random.SeedSequence(seed, spawn_key=tuple(path))
    return np.random.Generator(np.random.PCG64(ss))


def raw64(rng: np.random.Generator) -> int:
    return int(rng.bit_generator.random_raw())


def uniform_u64(bitgen, m: int) -> int:
    """Uniform integer in [0, m) for 1 <= m <= 2**64 from raw 64-bit words.

    Rejection keeps the result exactly uniform. The compiled kernels use
    the identical rule so both backends consume the same stream.
    """
    limit = (_TWO64 // m) * m
    while True:
        r = int(bitgen.random_raw())
        if r < limit:
            return r % m


def randbelow(rng: np.random.Generator, n: int) -> int:
    """Uniform integer in [0, n) for arbitrarily large ``n``."""
    if n <= 0:
        raise ValueError("n must be positive")
    if n <= _TWO64:
        return uniform_u64(rng.bit_generator, n)
    bits = n.bit_length()
    words = (bits + 63) // 64
    shift = words * 64 - bits
    bg = rng.bit_generator
    while True:
        r = 0
        for _ in range(words):
            r = (r << 64) | int(bg.random_raw())
        r >>= shift
        if r < n:
            return r


def randrange(rng: np.random.Generator, lo: int, hi: int) -> int:
    """Uniform integer in [lo, hi)."""
    return lo + randbelow(rng, hi - lo)
