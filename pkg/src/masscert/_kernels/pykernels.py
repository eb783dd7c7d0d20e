"""Python/numpy implementations of the integer-heavy kernels.

Same signatures as the compiled module; selected automatically when the
extension is unavailable (or forced via MASSCERT_PURE=1).  The box-range
kernel keeps exactness by doing the wide intermediate products with
Python integers; the compiled twin uses 128-bit machine arithmetic.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"


def totient_sieve(n: int) -> np.ndarray:
    """phi(0..n) as int64 (phi[0] = 0)."""
    if n < 0:
        raise ValueError("totient_sieve expects n >= 0")
    phi = np.arange(n + 1, dtype=np.int64)
    for p in range(2, n + 1):
        if phi[p] == p:  # p prime
            phi[p::p] -= phi[p::p] // p
    return phi


def smallest_prime_factors(n: int) -> np.ndarray:
    spf = np.zeros(n + 1, dtype=np.int64)
    for p in range(2, n + 1):
        if spf[p] == 0:
            spf[p::p] = np.where(spf[p::p] == 0, p, spf[p::p])
    return spf


def coprime_mask(q: int) -> np.ndarray:
    """Boolean mask over 0..q marking gcd(p, q) == 1."""
    mask = np.ones(q + 1, dtype=bool)
    if q == 1:
        return mask  # both 0 and 1 are coprime to 1
    mask[0] = False
    m = q
    p = 2
    while p * p <= m:
        if m % p == 0:
            mask[p::p] = False
            while m % p == 0:
                m //= p
        p += 1
    if m > 1:
        mask[m::m] = False
    return mask


def dyadic_box_ranges(q_lo: int, q_hi: int, rexp: int, m: int):
    """Inclusive dyadic box index ranges hit by the balls

        B(p/q, q**-rexp),  q in (q_lo, q_hi],  gcd(p, q) = 1,  0 <= p <= q,

    at resolution 2**-m.  Exact integer arithmetic:
    lo = floor((p*q^(rexp-1) - 1) * 2^m / q^rexp), hi likewise with +1.
    Returns (lo, hi) as int64 arrays.
    """
    los: list[int] = []
    his: list[int] = []
    T = 1 << m
    for q in range(q_lo + 1, q_hi + 1):
        ps = np.nonzero(coprime_mask(q))[0]
        D = q**rexp
        P = q ** (rexp - 1)
        for p in ps.tolist():
            a = p * P
            los.append((a - 1) * T // D)
            his.append((a + 1) * T // D)
    lo = np.array(los, dtype=np.int64)
    hi = np.array(his, dtype=np.int64)
    return lo, hi
