"""Quantize, noise, encrypt and aggregate real-valued model updates.

A client update travels as::

    clip to [-c, c] -> round(s * x) -> + discrete Gaussian noise
        -> center by M/2, reduce mod M -> encrypt g**value

The server multiplies ciphertexts coordinate-wise, decrypts the product,
removes the n*M/2 centering inside the group, and reads the (small) signed
sum back with a bounded discrete log.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._arith import powmod
from ..errors import DomainError
from .dlog import dlog_recover
from .elgamal import Ciphertext, KeyPair, decrypt, encrypt_exponent, fold
from .group import GroupParams
from .noise import sample_discrete_gaussian

DEFAULT_SCALE = 2 ** 10
DEFAULT_MODULUS = 2 ** 32


@dataclass(frozen=True)
class AggregationConfig:
    """Discretization and secure-summation parameters.

    ``dlog_bound`` is the width of the window the server searches: the
    signed aggregate must lie in [-dlog_bound // 2, dlog_bound // 2].
    """

    modulus: int = DEFAULT_MODULUS
    dlog_bound: int = 2 * (DEFAULT_SCALE + 1)
    scale: int = DEFAULT_SCALE
    clip: float = 1.0
    sigma: float = 0.0

    def __post_init__(self):
        if self.scale < 1:
            raise DomainError("scale must be a positive integer")
        if not self.clip > 0:
            raise DomainError("clip must be positive")
        if self.sigma < 0:
            raise DomainError("sigma must be non-negative")
        if self.dlog_bound < 1:
            raise DomainError("dlog_bound must be at least 1")
        if self.modulus % 2 or self.modulus <= 2 * self.dlog_bound:
            raise DomainError("modulus must be even and exceed 2 * dlog_bound")

    @classmethod
    def derive(cls, n_clients: int, scale: int = DEFAULT_SCALE, clip: float = 1.0,
               sigma: float = 0.0, modulus: int = DEFAULT_MODULUS) -> "AggregationConfig":
        """Config whose bound covers ``n_clients`` clipped updates plus a
        6-sigma noise tail per coordinate."""
        return cls(modulus, 2 * required_half_bound(n_clients, scale, clip, sigma), scale, clip, sigma)

    @property
    def half_bound(self) -> int:
        return self.dlog_bound // 2

    def check_capacity(self, n_clients: int) -> None:
        if self.half_bound < required_half_bound(n_clients, self.scale, self.clip, self.sigma):
            raise DomainError(f"dlog_bound {self.dlog_bound} too small for {n_clients} clients")


def required_half_bound(n_clients, scale, clip, sigma):
    if n_clients < 1:
        raise DomainError("n_clients must be at least 1")
    return n_clients * math.ceil(scale * clip) + math.ceil(6 * sigma * math.sqrt(n_clients))


@dataclass(frozen=True)
class QuantizedVector:
    values: np.ndarray
    scale: int
    clip: float

    def __len__(self):
        return len(self.values)


def quantize(v, config: AggregationConfig) -> QuantizedVector:
    x = np.asarray(v, dtype=np.float64).ravel()
    if np.isnan(x).any():
        raise DomainError("cannot quantize NaN")
    clipped = np.clip(x, -config.clip, config.clip)
    # np.rint rounds half to even
    return QuantizedVector(np.rint(clipped * config.scale).astype(np.int64), config.scale, config.clip)


def dequantize(qv: QuantizedVector) -> np.ndarray:
    return np.asarray(qv.values, dtype=np.float64) / qv.scale


def add_discrete_gaussian(qv: QuantizedVector, sigma: float, rng) -> QuantizedVector:
    noise = sample_discrete_gaussian(sigma, len(qv.values), rng)
    return QuantizedVector(qv.values + noise, qv.scale, qv.clip)


def center(values, modulus: int) -> list[int]:
    half = modulus // 2
    return [(int(v) + half) % modulus for v in values]


def encrypt_update(qv: QuantizedVector, pk: int, params: GroupParams, config: AggregationConfig,
                   rng) -> list[Ciphertext]:
    """One ciphertext of encode(centered value) per coordinate."""
    centered = center(qv.values, config.modulus)
    if centered and max(centered) >= params.q:
        raise DomainError("centered coordinate exceeds the group order; use a larger group")
    return [encrypt_exponent(pk, m, params, rng) for m in centered]


def aggregate_decrypt(vectors, keypair: KeyPair, params: GroupParams, config: AggregationConfig) -> np.ndarray:
    """Exact signed integer sum of the clients' quantized vectors.

    ``vectors`` holds one ciphertext sequence per client, all the same length.
    Raises OutOfBoundError when a coordinate's sum leaves the dlog window.
    """
    n = len(vectors)
    if n == 0:
        raise DomainError("no vectors to aggregate")
    dim = len(vectors[0])
    if any(len(v) != dim for v in vectors):
        raise DomainError("ciphertext vectors differ in length")
    p, q = params.p, params.q
    M = config.modulus
    half = config.half_bound
    shift = powmod(params.g, (half - n * (M // 2)) % q, p)
    out = np.empty(dim, dtype=np.int64)
    for j in range(dim):
        ct = fold((v[j] for v in vectors), params)
        e = decrypt(keypair.sk, ct, params) * shift % p
        s = dlog_recover(e, config.dlog_bound, params) - half
        out[j] = (s + M // 2) % M - M // 2
    return out
