"""Exponential ElGamal: key generation, encoding, encryption, homomorphic
combination.
"""
from __future__ import annotations

from dataclasses import dataclass

from ._arith import powmod
from ..errors import DomainError
from ..rng import randrange
from .group import GroupParams


@dataclass(frozen=True)
class KeyPair:
    sk: int
    pk: int

    def public(self) -> "KeyPair":
        """Copy without the secret exponent (``sk`` set to 0)."""
        return KeyPair(0, self.pk)


@dataclass(frozen=True)
class Ciphertext:
    c1: int
    c2: int


def keygen(params: GroupParams, rng, sk: int | None = None) -> KeyPair:
    """Uniform secret in [1, q-1] and its public element g**sk mod p.

    ``sk`` forces the secret, for known-answer tests.
    """
    if sk is None:
        sk = randrange(rng, 1, params.q)
    elif not 1 <= sk < params.q:
        raise DomainError("secret exponent must lie in [1, q-1]")
    return KeyPair(sk, powmod(params.g, sk, params.p))


def encode(m: int, params: GroupParams) -> int:
    """g**m mod p; negative m wraps modulo q."""
    return powmod(params.g, m % params.q, params.p)


def encrypt(pk: int, message: int, params: GroupParams, rng=None, *, k: int | None = None) -> Ciphertext:
    """Encrypt a subgroup element under ``pk`` with a fresh ephemeral key.

    ``k`` forces the ephemeral exponent (known-answer tests only).
    """
    if not params.contains(message):
        raise DomainError("message is not an element of the order-q subgroup")
    if k is None:
        k = randrange(rng, 1, params.q)
    return _encrypt_raw(pk, message, params, k)


def _encrypt_raw(pk, message, params, k):
    p = params.p
    return Ciphertext(powmod(params.g, k, p), message * powmod(pk, k, p) % p)


def encrypt_exponent(pk: int, m: int, params: GroupParams, rng) -> Ciphertext:
    """Encrypt encode(m) without the subgroup check (encodings are members by construction)."""
    p, q = params.p, params.q
    k = randrange(rng, 1, q)
    return Ciphertext(powmod(params.g, k, p), powmod(params.g, m % q, p) * powmod(pk, k, p) % p)


def decrypt(sk: int, ct: Ciphertext, params: GroupParams) -> int:
    """c2 * (c1**sk)**-1 mod p."""
    p = params.p
    if not (0 < ct.c1 < p and 0 < ct.c2 < p):
        raise DomainError("ciphertext component out of range")
    return ct.c2 * powmod(powmod(ct.c1, sk, p), -1, p) % p


def hom_combine(a: Ciphertext, b: Ciphertext, params: GroupParams) -> Ciphertext:
    """Componentwise product; decrypts to the product of the plaintexts."""
    p = params.p
    return Ciphertext(a.c1 * b.c1 % p, a.c2 * b.c2 % p)


def fold(cts, params: GroupParams) -> Ciphertext:
    """hom_combine over a non-empty iterable of ciphertexts."""
    p = params.p
    it = iter(cts)
    try:
        first = next(it)
    except StopIteration:
        raise DomainError("cannot fold an empty ciphertext sequence") from None
    c1, c2 = first.c1, first.c2
    for ct in it:
        c1 = c1 * ct.c1 % p
        c2 = c2 * ct.c2 % p
    return Ciphertext(c1, c2)
