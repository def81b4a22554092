"""Safe-prime groups for exponential ElGamal.

Messages live in the order-q subgroup of quadratic residues modulo a safe
prime p = 2q + 1.
"""
from __future__ import annotations

from dataclasses import dataclass

from ._arith import powmod
from ..errors import DomainError, GenerationBudgetError
from ..rng import make_rng, randrange

# Miller-Rabin error per round is at most 1/4, so 40 rounds give < 2**-80.
MR_ROUNDS = 40
MIN_BITS = 8
DEFAULT_BUDGET = 2_000_000

_SMALL_PRIMES = [p for p in range(3, 2000) if all(p % d for d in range(2, int(p ** 0.5) + 1))]


@dataclass(frozen=True)
class GroupParams:
    p: int
    q: int
    g: int

    def validate(self, rng=None) -> "GroupParams":
        """Check every group invariant; returns self so calls can chain."""
        if self.p != 2 * self.q + 1:
            raise DomainError("p must equal 2q + 1")
        if rng is None:
            rng = make_rng(0)
        if not is_probable_prime(self.q, rng) or not is_probable_prime(self.p, rng):
            raise DomainError("p and q must both be prime")
        if not 1 < self.g < self.p or powmod(self.g, self.q, self.p) != 1:
            raise DomainError("g must generate the order-q subgroup")
        return self

    def contains(self, element: int) -> bool:
        return 0 < element < self.p and powmod(element, self.q, self.p) == 1

    @property
    def bits(self) -> int:
        return self.p.bit_length()


def is_probable_prime(n: int, rng, rounds: int = MR_ROUNDS) -> bool:
    if n < 2:
        return False
    if n in (2, 3):
        return True
    if n % 2 == 0:
        return False
    for sp in _SMALL_PRIMES:
        if n == sp:
            return True
        if n % sp == 0:
            return False
    d, r = n - 1, 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for _ in range(rounds):
        a = randrange(rng, 2, n - 1)
        x = powmod(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _sieve_ok(q: int) -> bool:
    # reject q or p = 2q+1 divisible by a small prime
    for sp in _SMALL_PRIMES:
        rem = q % sp
        if rem == 0:
            return q == sp
        if rem == (sp - 1) // 2:
            return 2 * q + 1 == sp
    return True


def generate_group(bit_length: int, seed: int = 0, budget: int = DEFAULT_BUDGET) -> GroupParams:
    """Deterministically generate a safe-prime group with a ``bit_length``-bit p.

    Raises GenerationBudgetError when ``bit_length`` is below 8 bits or no
    safe prime turns up within ``budget`` candidates.
    """
    if bit_length < MIN_BITS:
        raise GenerationBudgetError(f"no usable safe prime below {MIN_BITS} bits (asked for {bit_length})")
    rng = make_rng(seed)
    lo = 1 << (bit_length - 2)
    span = lo
    for _ in range(budget):
        q = (lo + randrange(rng, 0, span)) | 1
        if not _sieve_ok(q):
            continue
        if not is_probable_prime(q, rng, rounds=2):
            continue
        p = 2 * q + 1
        if p.bit_length() != bit_length:
            continue
        if is_probable_prime(q, rng) and is_probable_prime(p, rng):
            while True:
                h = randrange(rng, 2, p - 1)
                g = h * h % p
                if g != 1:
                    return GroupParams(p, q, g)
    raise GenerationBudgetError(f"no {bit_length}-bit safe prime within {budget} candidates")
