"""Bounded discrete logarithm by baby-step giant-step."""
from __future__ import annotations

from functools import lru_cache
from math import isqrt

from ._arith import powmod
from ..errors import DomainError, OutOfBoundError
from .group import GroupParams


@lru_cache(maxsize=16)
def _baby_steps(p: int, g: int, m: int) -> dict:
    table = {}
    e = 1
    for j in range(m):
        table.setdefault(e, j)
        e = e * g % p
    return table


def dlog_recover(element: int, bound: int, params: GroupParams) -> int:
    """Smallest m in [0, bound] with g**m == element (mod p).

    O(sqrt(bound)) group operations; the baby-step table is cached per
    (group, table size) so repeated recoveries at one bound only pay for
    the giant steps.
    """
    if bound < 1:
        raise DomainError("bound must be at least 1")
    p, g = params.p, params.g
    m = isqrt(bound) + 1
    table = _baby_steps(p, g, m)
    giant = powmod(g, -m, p)
    gamma = element % p
    for i in range(m + 1):
        j = table.get(gamma)
        if j is not None:
            x = i * m + j
            if x <= bound:
                return x
            break
        gamma = gamma * giant % p
    raise OutOfBoundError(f"no exponent in [0, {bound}]")
