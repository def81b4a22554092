# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; see ``_kernels_py`` for the reference semantics."""
import numpy as np

cimport numpy as cnp
from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.stdint cimport uint64_t, int64_t, UINT64_MAX
from libc.string cimport memcpy
from numpy.random cimport bitgen_t

cnp.import_array()

cdef extern from *:
    ctypedef unsigned long long u128 "unsigned __int128"

cdef extern from "openssl/sha.h":
    ctypedef struct SHA256_CTX:
        pass
    int SHA256_Init(SHA256_CTX *c) nogil
    int SHA256_Update(SHA256_CTX *c, const void *data, size_t n) nogil
    int SHA256_Final(unsigned char *md, SHA256_CTX *c) nogil

cdef uint64_t YBT_LIMIT = (<uint64_t>1) << 62


def im2col(double[:, :, :, ::1] xp, int kh, int kw, int stride):
    cdef Py_ssize_t n = xp.shape[0], c = xp.shape[1]
    cdef Py_ssize_t ho = (xp.shape[2] - kh) // stride + 1
    cdef Py_ssize_t wo = (xp.shape[3] - kw) // stride + 1
    out_arr = np.empty((n, ho, wo, c, kh, kw), dtype=np.float64)
    cdef double[:, :, :, :, :, ::1] out = out_arr
    cdef Py_ssize_t a, y, x, ch, i, j
    with nogil:
        for a in range(n):
            for y in range(ho):
                for x in range(wo):
                    for ch in range(c):
                        for i in range(kh):
                            for j in range(kw):
                                out[a, y, x, ch, i, j] = xp[a, ch, y * stride + i, x * stride + j]
    return out_arr


def col2im(dcols_in, padded_shape, int kh, int kw, int stride):
    cdef double[:, :, :, :, :, ::1] d = np.ascontiguousarray(dcols_in, dtype=np.float64)
    out_arr = np.zeros(padded_shape, dtype=np.float64)
    cdef double[:, :, :, ::1] out = out_arr
    cdef Py_ssize_t n = d.shape[0], ho = d.shape[1], wo = d.shape[2], c = d.shape[3]
    cdef Py_ssize_t a, y, x, ch, i, j
    with nogil:
        for a in range(n):
            for ch in range(c):
                for i in range(kh):
                    for j in range(kw):
                        for y in range(ho):
                            for x in range(wo):
                                out[a, ch, i + stride * y, j + stride * x] += d[a, y, x, ch, i, j]
    return out_arr


cdef inline bint _meets(const unsigned char *h, int difficulty) nogil:
    cdef int full = difficulty >> 3, rem = difficulty & 7, k
    for k in range(full):
        if h[k] != 0:
            return False
    if rem and (h[full] >> (8 - rem)) != 0:
        return False
    return True


def search_nonce(bytes prefix, int difficulty, start=0):
    if difficulty < 0 or difficulty > 256:
        raise ValueError("difficulty must be in [0, 256]")
    cdef SHA256_CTX base, ctx
    cdef unsigned char digest[32]
    cdef unsigned char buf[8]
    cdef uint64_t nonce = start
    cdef const unsigned char *p = prefix
    cdef size_t plen = len(prefix)
    cdef int k
    cdef bint found = False
    with nogil:
        SHA256_Init(&base)
        SHA256_Update(&base, p, plen)
        while True:
            memcpy(&ctx, &base, sizeof(SHA256_CTX))
            for k in range(8):
                buf[k] = (nonce >> (56 - 8 * k)) & 0xFF
            SHA256_Update(&ctx, buf, 8)
            SHA256_Final(digest, &ctx)
            if _meets(digest, difficulty):
                found = True
                break
            if nonce == UINT64_MAX:
                break
            nonce += 1
    if not found:
        raise OverflowError("nonce space exhausted")
    return int(nonce), bytes(digest[:32])


cdef inline uint64_t _uniform(bitgen_t *bg, uint64_t m) noexcept nogil:
    cdef uint64_t q = UINT64_MAX // m, rem = UINT64_MAX % m, r
    if rem == m - 1:
        # m divides 2**64: every word is acceptable
        return bg.next_uint64(bg.state) % m
    cdef uint64_t limit = q * m
    while True:
        r = bg.next_uint64(bg.state)
        if r < limit:
            return r % m


cdef inline int _bern_exp1(bitgen_t *bg, uint64_t num, uint64_t den) noexcept nogil:
    cdef uint64_t k = 1
    # den < 2**56 is enforced by the caller, so den * k cannot overflow for k <= 256
    while k < 256 and _uniform(bg, den * k) < num:
        k += 1
    return <int>(k & 1)


cdef inline int _bern_exp(bitgen_t *bg, u128 num, uint64_t den) noexcept nogil:
    while num > den:
        if _bern_exp1(bg, 1, 1):
            num -= den
        else:
            return 0
    return _bern_exp1(bg, <uint64_t>num, den)


def dgauss_sample(bit_generator, Py_ssize_t n, a, b, t):
    cdef uint64_t ca = a, cb = b, ct = t
    den_py = 2 * a * b * t * t
    if den_py >= (1 << 56):
        raise OverflowError("sigma parameters too large for the compiled sampler")
    cdef uint64_t den2 = den_py
    out_arr = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] out = out_arr
    capsule = bit_generator.capsule
    cdef bitgen_t *bg = <bitgen_t *> PyCapsule_GetPointer(capsule, "BitGenerator")
    cdef Py_ssize_t i
    cdef uint64_t u, v, y, neg, ybt
    cdef u128 diff
    with bit_generator.lock, nogil:
        for i in range(n):
            while True:
                u = _uniform(bg, ct)
                if not _bern_exp(bg, u, ct):
                    continue
                v = 0
                while _bern_exp(bg, 1, 1):
                    v += 1
                neg = _uniform(bg, 2)
                y = u + ct * v
                if neg and y == 0:
                    continue
                if y >= (YBT_LIMIT + cb * ct - 1) // (cb * ct):
                    continue
                ybt = y * cb * ct
                if ybt >= ca:
                    diff = ybt - ca
                else:
                    diff = ca - ybt
                if _bern_exp(bg, diff * diff, den2):
                    out[i] = -(<int64_t>y) if neg else <int64_t>y
                    break
    return out_arr
