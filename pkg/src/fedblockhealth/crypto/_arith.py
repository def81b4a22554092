"""Modular exponentiation, accelerated by gmpy2 when it is installed."""

try:
    import gmpy2

    def powmod(base: int, exp: int, mod: int) -> int:
        return int(gmpy2.powmod(base, exp, mod))

    HAVE_GMPY2 = True
except ImportError:  # pragma: no cover - exercised only without gmpy2
    powmod = pow
    HAVE_GMPY2 = False
