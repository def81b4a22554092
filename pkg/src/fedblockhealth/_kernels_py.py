"""Pure-Python/numpy kernels.

Reference twin of ``_kernels.pyx``. Both modules expose the same four
functions and produce bit-identical results for identical inputs and RNG
state; the test suite checks this whenever the compiled module is present.
"""
import hashlib

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

_TWO64 = 1 << 64
# |Y|*b*t at or beyond this is rejected outright (acceptance prob < exp(-2**60)).
YBT_LIMIT = 1 << 62


def im2col(xp, kh, kw, stride):
    """Patches of a padded NCHW batch as an (N, Ho, Wo, C, kh, kw) array."""
    win = sliding_window_view(xp, (kh, kw), axis=(2, 3))[:, :, ::stride, ::stride]
    return np.ascontiguousarray(win.transpose(0, 2, 3, 1, 4, 5))


def col2im(dcols, padded_shape, kh, kw, stride):
    """Scatter-add patch gradients back onto an NCHW (padded) image."""
    n, ho, wo, c = dcols.shape[:4]
    out = np.zeros(padded_shape, dtype=np.float64)
    d = dcols.transpose(0, 3, 1, 2, 4, 5)
    for i in range(kh):
        for j in range(kw):
            out[:, :, i:i + stride * ho:stride, j:j + stride * wo:stride] += d[..., i, j]
    return out


def search_nonce(prefix, difficulty, start=0):
    """Smallest nonce >= start whose SHA-256(prefix || u64be(nonce)) has
    ``difficulty`` leading zero bits. Returns (nonce, digest)."""
    base = hashlib.sha256(prefix)
    shift = 256 - difficulty
    nonce = start
    while nonce < _TWO64:
        h = base.copy()
        h.update(nonce.to_bytes(8, "big"))
        digest = h.digest()
        if difficulty == 0 or int.from_bytes(digest, "big") >> shift == 0:
            return nonce, digest
        nonce += 1
    raise OverflowError("nonce space exhausted")


def _uniform(bg, m):
    limit = (_TWO64 // m) * m
    while True:
        r = int(bg.random_raw())
        if r < limit:
            return r % m


def _bern_exp1(bg, num, den):
    # Bernoulli(exp(-num/den)) for 0 <= num <= den
    # k is capped at 256 (reached with probability < 1/255!) to keep den * k in 64 bits
    k = 1
    while k < 256 and _uniform(bg, den * k) < num:
        k += 1
    return k & 1


def _bern_exp(bg, num, den):
    while num > den:
        if _bern_exp1(bg, 1, 1):
            num -= den
        else:
            return 0
    return _bern_exp1(bg, num, den)


def dgauss_sample(bit_generator, n, a, b, t):
    """``n`` exact discrete Gaussian draws with sigma**2 = a/b.

    Rejection sampling from a discrete Laplace proposal of scale ``t``
    (t = floor(sigma) + 1), all arithmetic in integers.
    """
    out = np.empty(n, dtype=np.int64)
    den2 = 2 * a * b * t * t
    bg = bit_generator
    for i in range(n):
        while True:
            u = _uniform(bg, t)
            if not _bern_exp(bg, u, t):
                continue
            v = 0
            while _bern_exp(bg, 1, 1):
                v += 1
            neg = _uniform(bg, 2)
            y = u + t * v
            if neg and y == 0:
                continue
            ybt = y * b * t
            if ybt >= YBT_LIMIT:
                continue
            diff = ybt - a
            if _bern_exp(bg, diff * diff, den2):
                out[i] = -y if neg else y
                break
    return out
