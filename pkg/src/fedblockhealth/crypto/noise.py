"""Exact discrete Gaussian sampling."""
from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .._backend import kernels
from ..errors import DomainError

# 2*a*b*t**2 must stay below this for the integer kernels
_DEN_LIMIT = 1 << 56


def sigma_parameters(sigma: float) -> tuple[int, int, int]:
    """Integer parameters (a, b, t) with sigma**2 ~= a/b and t = floor(sigma) + 1.

    sigma**2 is rounded to the nearest fraction whose denominator keeps the
    sampler's integer arithmetic inside 64 bits. Exact for integer sigma.
    """
    if not math.isfinite(sigma) or sigma <= 0:
        raise DomainError("sigma must be a positive finite number")
    t = math.floor(sigma) + 1
    max_den = int(2 ** 27.5 / (sigma * t))
    if max_den < 1:
        raise DomainError(f"sigma={sigma} is too large for the exact sampler")
    frac = Fraction(sigma * sigma).limit_denominator(min(max_den, 1 << 16))
    a, b = frac.numerator, frac.denominator
    if a == 0 or 2 * a * b * t * t >= _DEN_LIMIT:
        raise DomainError(f"sigma={sigma} cannot be represented by the exact sampler")
    return a, b, t


def sample_discrete_gaussian(sigma: float, size: int, rng: np.random.Generator, backend=None) -> np.ndarray:
    """``size`` independent draws with P(y) proportional to exp(-y**2 / (2 sigma**2)).

    sigma == 0 returns zeros without touching the generator.
    """
    if sigma < 0:
        raise DomainError("sigma must be non-negative")
    if sigma == 0 or size == 0:
        return np.zeros(size, dtype=np.int64)
    a, b, t = sigma_parameters(sigma)
    k = backend if backend is not None else kernels
    return k.dgauss_sample(rng.bit_generator, int(size), a, b, t)


def discrete_gaussian_pmf(sigma: float, support: np.ndarray, tail: int | None = None) -> np.ndarray:
    """Probabilities of ``support`` under the discrete Gaussian, normalized over
    [-tail, tail] (default 40 sigma + 10)."""
    if tail is None:
        tail = int(40 * sigma) + 10
    ys = np.arange(-tail, tail + 1, dtype=np.float64)
    z = np.exp(-ys * ys / (2 * sigma * sigma)).sum()
    s = np.asarray(support, dtype=np.float64)
    return np.exp(-s * s / (2 * sigma * sigma)) / z
