# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the hot integer kernels (see pykernels.py).

The box-range kernel needs products up to ~2^113 for q <= 2^13 and
rexp <= 5, so the intermediates run through GCC's __int128.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

cdef extern from *:
    ctypedef long long int128 "__int128"

BACKEND = "compiled"


def totient_sieve(long long n):
    """phi(0..n) as int64 (phi[0] = 0)."""
    if n < 0:
        raise ValueError("totient_sieve expects n >= 0")
    cdef cnp.ndarray[cnp.int64_t, ndim=1] phi = np.arange(n + 1, dtype=np.int64)
    cdef long long p, i
    for p in range(2, n + 1):
        if phi[p] == p:
            for i in range(p, n + 1, p):
                phi[i] -= phi[i] // p
    return phi


def smallest_prime_factors(long long n):
    cdef cnp.ndarray[cnp.int64_t, ndim=1] spf = np.zeros(n + 1, dtype=np.int64)
    cdef long long p, i
    for p in range(2, n + 1):
        if spf[p] == 0:
            for i in range(p, n + 1, p):
                if spf[i] == 0:
                    spf[i] = p
    return spf


def coprime_mask(long long q):
    """Boolean mask over 0..q marking gcd(p, q) == 1."""
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] mask = np.ones(q + 1, dtype=np.uint8)
    cdef long long m, p, i
    if q == 1:
        return mask.view(np.bool_)
    mask[0] = 0
    m = q
    p = 2
    while p * p <= m:
        if m % p == 0:
            for i in range(p, q + 1, p):
                mask[i] = 0
            while m % p == 0:
                m //= p
        p += 1
    if m > 1:
        for i in range(m, q + 1, m):
            mask[i] = 0
    return mask.view(np.bool_)


cdef inline int128 _fdiv(int128 x, int128 d):
    # floor division for d > 0 under C truncation semantics
    if x >= 0:
        return x // d
    return -((-x + d - 1) // d)


def dyadic_box_ranges(long long q_lo, long long q_hi, int rexp, int m):
    """See pykernels.dyadic_box_ranges; identical contract."""
    cdef long long total = 0
    cdef long long q, p, n_out
    cdef int128 D, P, T, a
    cdef int e
    if m + rexp * 14 > 120:
        raise OverflowError("resolution too fine for 128-bit intermediates")
    cdef cnp.ndarray[cnp.int64_t, ndim=1] phi = totient_sieve(q_hi if q_hi > 1 else 1)
    for q in range(q_lo + 1, q_hi + 1):
        total += phi[q] if q > 1 else 2
    cdef cnp.ndarray[cnp.int64_t, ndim=1] lo = np.empty(total, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] hi = np.empty(total, dtype=np.int64)
    cdef cnp.ndarray mask
    cdef cnp.uint8_t[:] mview
    n_out = 0
    T = 1
    for e in range(m):
        T = T * 2
    for q in range(q_lo + 1, q_hi + 1):
        mask = coprime_mask(q).view(np.uint8)
        mview = mask
        D = 1
        for e in range(rexp):
            D = D * q
        P = D // q
        for p in range(q + 1):
            if mview[p]:
                a = <int128>p * P
                lo[n_out] = <long long>_fdiv((a - 1) * T, D)
                hi[n_out] = <long long>_fdiv((a + 1) * T, D)
                n_out += 1
    assert n_out == total
    return lo, hi
