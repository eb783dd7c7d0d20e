"""Exact arithmetic for rational powers of rationals.

Everything downstream (ball predicates, volume identities, selection
thresholds) reduces to deciding the sign of

    c0 + sum_i  c_i * b_i ** e_i

with all of c0, c_i, b_i > 0, e_i rational.  Each power is first
rationalised if it is an exact perfect power; what remains is a sum of
canonical radical monomials, which are linearly independent over Q, so
adaptive interval refinement always terminates on nonzero values.
Comparisons never fall back to floats.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import gcd, lcm
from typing import Iterable, Sequence, Union


class PrecisionError(ArithmeticError):
    """Interval refinement hit the bit cap without deciding a sign."""


# ---------------------------------------------------------------------------
# integer helpers


def iroot(n: int, k: int) -> tuple[int, bool]:
    """Floor k-th root of n >= 0 together with an exactness flag."""
    if n < 0 or k < 1:
        raise ValueError("iroot expects n >= 0, k >= 1")
    if k == 1 or n in (0, 1):
        return n, True
    # Newton iteration from an upper seed; strictly decreasing until fixed.
    x = 1 << -(-n.bit_length() // k)
    while True:
        y = ((k - 1) * x + n // x ** (k - 1)) // k
        if y >= x:
            break
        x = y
    return x, x**k == n


def _is_probable_prime(n: int) -> bool:
    if n < 2:
        return False
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % p == 0:
            return n == p
    d = n - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    # deterministic Miller-Rabin for n < 3.3e24
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _pollard_rho(n: int) -> int:
    if n % 2 == 0:
        return 2
    rng = random.Random(n)
    while True:
        c = rng.randrange(1, n)
        x = y = rng.randrange(2, n)
        d = 1
        while d == 1:
            x = (x * x + c) % n
            y = (y * y + c) % n
            y = (y * y + c) % n
            d = gcd(abs(x - y), n)
        if d != n:
            return d


def factorint(n: int) -> dict[int, int]:
    """Prime factorisation of n >= 1 (trial division, then Pollard rho)."""
    if n < 1:
        raise ValueError("factorint expects n >= 1")
    out: dict[int, int] = {}
    for p in (2, 3, 5):
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
    f = 7
    # 2/4-wheel over 7, 11, 13, ...; enough for desk-scale operands
    step = 4
    while f * f <= n and f < 1 << 20:
        while n % f == 0:
            out[f] = out.get(f, 0) + 1
            n //= f
        f += step
        step = 6 - step
    if n > 1:
        stack = [n]
        while stack:
            m = stack.pop()
            if m == 1:
                continue
            if _is_probable_prime(m):
                out[m] = out.get(m, 0) + 1
                continue
            d = _pollard_rho(m)
            stack.append(d)
            stack.append(m // d)
    return out


# ---------------------------------------------------------------------------
# exact / bounded evaluation of base ** exp


def qpow(base: Fraction, exp: Fraction) -> Fraction | None:
    """base ** exp as an exact Fraction, or None when irrational.

    base must be > 0 (base == 0 allowed with exp > 0).
    """
    base = Fraction(base)
    exp = Fraction(exp)
    if base < 0:
        raise ValueError("qpow expects a nonnegative base")
    if base == 0:
        if exp <= 0:
            raise ZeroDivisionError("0 ** nonpositive exponent")
        return Fraction(0)
    if exp == 0 or base == 1:
        return Fraction(1)
    a, b = exp.numerator, exp.denominator
    if a < 0:
        base = 1 / base
        a = -a
    # guard against runaway operand growth; desk-scale inputs stay tiny
    if base.numerator.bit_length() * a > 1 << 22 or base.denominator.bit_length() * a > 1 << 22:
        raise OverflowError("qpow operand too large")
    num = base.numerator**a
    den = base.denominator**a
    rn, okn = iroot(num, b)
    if not okn:
        return None
    rd, okd = iroot(den, b)
    if not okd:
        return None
    return Fraction(rn, rd)


def pow_bounds(base: Fraction, exp: Fraction, bits: int) -> tuple[Fraction, Fraction]:
    """Certified enclosure lo <= base**exp <= hi with width ~ 2**-bits."""
    exact = qpow(base, exp)
    if exact is not None:
        return exact, exact
    a, b = exp.numerator, exp.denominator
    if a < 0:
        base = 1 / Fraction(base)
        a = -a
    num = base.numerator**a
    den = base.denominator**a
    shift = b * bits
    t_lo = (num << shift) // den
    r_lo, _ = iroot(t_lo, b)
    t_hi = -((-num << shift) // den)  # ceil division
    r_hi, exact_hi = iroot(t_hi, b)
    if not exact_hi:
        r_hi += 1
    return Fraction(r_lo, 1 << bits), Fraction(r_hi, 1 << bits)


# ---------------------------------------------------------------------------
# canonical radical monomials

RootKey = tuple[tuple[int, Fraction], ...]  # ((prime, fractional exponent), ...)


def _canonical(base: Fraction, exp: Fraction) -> tuple[Fraction, RootKey]:
    """Rewrite base**exp as coef * prod(p ** f_p) with every f_p in (0, 1).

    Distinct nonempty root keys denote Q-linearly independent irrationals,
    which is what makes sign decisions below terminate.
    """
    base = Fraction(base)
    exp = Fraction(exp)
    if base <= 0:
        raise ValueError("canonical form needs base > 0")
    if base == 1 or exp == 0:
        return Fraction(1), ()
    coef = Fraction(1)
    root: list[tuple[int, Fraction]] = []
    fac = dict(factorint(base.numerator))
    for p, e in factorint(base.denominator).items():
        fac[p] = fac.get(p, 0) - e
    for p in sorted(fac):
        t = fac[p] * exp
        whole = t.numerator // t.denominator
        fpart = t - whole
        if whole:
            coef *= Fraction(p) ** whole
        if fpart:
            root.append((p, fpart))
    return coef, tuple(root)


@lru_cache(maxsize=None)
def _root_bounds(key: RootKey, bits: int) -> tuple[Fraction, Fraction]:
    den = lcm(*(f.denominator for _, f in key))
    radicand = 1
    for p, f in key:
        radicand *= p ** (f.numerator * (den // f.denominator))
    return pow_bounds(Fraction(radicand), Fraction(1, den), bits)


def sign_canon(const: Fraction, terms: Sequence[tuple[Fraction, RootKey]], max_bits: int = 4096) -> int:
    """Sign of const + sum(coef * radical) for canonical radical terms."""
    merged: dict[RootKey, Fraction] = {}
    for coef, key in terms:
        if not key:
            const += coef
            continue
        merged[key] = merged.get(key, Fraction(0)) + coef
    live = [(c, k) for k, c in sorted(merged.items()) if c]
    if not live:
        return (const > 0) - (const < 0)
    bits = 32
    while True:
        lo = hi = const
        for coef, key in live:
            blo, bhi = _root_bounds(key, bits)
            if coef > 0:
                lo += coef * blo
                hi += coef * bhi
            else:
                lo += coef * bhi
                hi += coef * blo
        if lo > 0:
            return 1
        if hi < 0:
            return -1
        if bits >= max_bits:
            raise PrecisionError(f"sign undecided at {bits} bits")
        bits *= 2


def sign_affine(
    const: Fraction,
    terms: Iterable[tuple[Fraction, Fraction, Fraction]] = (),
    max_bits: int = 4096,
) -> int:
    """Sign of const + sum(coef * base**exp); exact, never floating point."""
    canon: list[tuple[Fraction, RootKey]] = []
    for coef, base, exp in terms:
        coef = Fraction(coef)
        if coef == 0:
            continue
        c, key = _canonical(Fraction(base), Fraction(exp))
        canon.append((coef * c, key))
    return sign_canon(Fraction(const), canon, max_bits=max_bits)


# ---------------------------------------------------------------------------
# XR: exact reals of the single-monomial kind (all radii/volumes used here)


@dataclass(frozen=True)
class Pow:
    """Irrational monomial coef * prod(p ** f_p); always canonical."""

    coef: Fraction
    root: RootKey

    def terms(self) -> tuple[tuple[Fraction, RootKey], ...]:
        return ((self.coef, self.root),)

    def bounds(self, bits: int = 128) -> tuple[Fraction, Fraction]:
        lo, hi = _root_bounds(self.root, bits)
        if self.coef >= 0:
            return self.coef * lo, self.coef * hi
        return self.coef * hi, self.coef * lo

    def __float__(self) -> float:
        lo, hi = self.bounds(96)
        return float((lo + hi) / 2)

    def __repr__(self) -> str:
        parts = "*".join(f"{p}^({f})" for p, f in self.root)
        return f"({self.coef})*{parts}"


XR = Union[Fraction, Pow]


def xr_make(coef: Fraction, root: RootKey) -> XR:
    if not root or coef == 0:
        return Fraction(coef)
    return Pow(Fraction(coef), root)


def xr_pow(base: Fraction, exp: Fraction) -> XR:
    """base ** exp for rational base > 0 as an exact value."""
    r = qpow(base, exp)
    if r is not None:
        return r
    coef, root = _canonical(base, exp)
    return xr_make(coef, root)


def xr_terms(x: XR) -> tuple[tuple[Fraction, RootKey], ...]:
    if isinstance(x, Pow):
        return x.terms()
    return ((Fraction(x), ()),)


def xr_mul_q(x: XR, q: Fraction) -> XR:
    q = Fraction(q)
    if isinstance(x, Pow):
        return xr_make(x.coef * q, x.root)
    return x * q


def xr_pow_int(x: XR, n: int) -> XR:
    """x ** n for integer n >= 0 (x > 0 when Pow)."""
    if not isinstance(x, Pow):
        return Fraction(x) ** n
    if n == 0:
        return Fraction(1)
    coef = x.coef**n
    root: list[tuple[int, Fraction]] = []
    for p, f in x.root:
        t = f * n
        whole = t.numerator // t.denominator
        fpart = t - whole
        if whole:
            coef *= Fraction(p) ** whole
        if fpart:
            root.append((p, fpart))
    return xr_make(coef, tuple(root))


def _renorm(coef: Fraction, expmap: dict[int, Fraction]) -> XR:
    root: list[tuple[int, Fraction]] = []
    for p in sorted(expmap):
        t = expmap[p]
        if not t:
            continue
        whole = t.numerator // t.denominator
        fpart = t - whole
        if whole:
            coef *= Fraction(p) ** whole
        if fpart:
            root.append((p, fpart))
    return xr_make(coef, tuple(root))


def xr_mul(a: XR, b: XR) -> XR:
    if not isinstance(a, Pow) and not isinstance(b, Pow):
        return Fraction(a) * Fraction(b)
    expmap: dict[int, Fraction] = {}
    coef = Fraction(1)
    for x in (a, b):
        if isinstance(x, Pow):
            coef *= x.coef
            for p, f in x.root:
                expmap[p] = expmap.get(p, Fraction(0)) + f
        else:
            coef *= Fraction(x)
    if coef == 0:
        return Fraction(0)
    return _renorm(coef, expmap)


def xr_prod(xs: Iterable[XR]) -> XR:
    out: XR = Fraction(1)
    for x in xs:
        out = xr_mul(out, x)
    return out


def xr_inv(x: XR) -> XR:
    """1/x for positive x."""
    if not isinstance(x, Pow):
        return 1 / Fraction(x)
    expmap = {p: -f for p, f in x.root}
    return _renorm(1 / x.coef, expmap)


def xr_floor(x: XR, max_bits: int = 4096) -> int:
    """Exact floor; terminates because an irrational monomial is never an integer."""
    if not isinstance(x, Pow):
        f = Fraction(x)
        return f.numerator // f.denominator
    bits = 32
    while True:
        lo, hi = x.bounds(bits)
        flo = lo.numerator // lo.denominator
        fhi = hi.numerator // hi.denominator
        if flo == fhi:
            return flo
        if bits >= max_bits:
            raise PrecisionError("floor undecided")
        bits *= 2


def xr_sign(parts: Sequence[tuple[Fraction, XR]], max_bits: int = 4096) -> int:
    """Sign of sum(scale * value) over (scale, XR) pairs."""
    const = Fraction(0)
    canon: list[tuple[Fraction, RootKey]] = []
    for scale, value in parts:
        scale = Fraction(scale)
        if scale == 0:
            continue
        for coef, key in xr_terms(value):
            if key:
                canon.append((scale * coef, key))
            else:
                const += scale * coef
    return sign_canon(const, canon, max_bits=max_bits)


def xr_cmp(a: XR, b: XR) -> int:
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return (a > b) - (a < b)
    return xr_sign([(Fraction(1), a), (Fraction(-1), b)])


def xr_is_rational(x: XR) -> bool:
    return not isinstance(x, Pow)


def xr_bounds(x: XR, bits: int = 128) -> tuple[Fraction, Fraction]:
    if isinstance(x, Pow):
        return x.bounds(bits)
    return Fraction(x), Fraction(x)


# ---------------------------------------------------------------------------
# certified natural logarithm bounds (used only by log-corrected volumes)

# 4000-bit enclosure of ln 2, precomputed once via the atanh series below.
_LN2_BITS = 256


def _atanh_series_bounds(t: Fraction, bits: int) -> tuple[Fraction, Fraction]:
    """Enclosure of atanh(t) = sum t^(2j+1)/(2j+1) for 0 < t < 1/2."""
    target = Fraction(1, 1 << (bits + 8))
    s = Fraction(0)
    term = t
    j = 0
    while True:
        s += term / (2 * j + 1)
        term *= t * t
        j += 1
        # geometric tail bound: term/(2j+1) * 1/(1-t^2)
        tail = term / ((2 * j + 1) * (1 - t * t))
        if tail < target:
            return s, s + tail


@lru_cache(maxsize=None)
def _ln_int_bounds(n: int, bits: int) -> tuple[Fraction, Fraction]:
    """Certified bounds for ln(n), n >= 1."""
    if n < 1:
        raise ValueError("ln of nonpositive integer")
    if n == 1:
        return Fraction(0), Fraction(0)
    if n == 2:
        lo, hi = _atanh_series_bounds(Fraction(1, 3), bits)
        return 2 * lo, 2 * hi
    # n = 2^e * m with m in [1, 2): ln n = e ln 2 + 2 atanh((m-1)/(m+1))
    e = n.bit_length() - 1
    m = Fraction(n, 1 << e)
    l2lo, l2hi = _ln_int_bounds(2, bits)
    t = (m - 1) / (m + 1)
    alo, ahi = _atanh_series_bounds(t, bits) if t else (Fraction(0), Fraction(0))
    return e * l2lo + 2 * alo, e * l2hi + 2 * ahi


def ln_bounds(x: Fraction, bits: int = 128) -> tuple[Fraction, Fraction]:
    """Certified bounds for ln(x), rational x > 0."""
    x = Fraction(x)
    if x <= 0:
        raise ValueError("ln expects x > 0")
    nlo, nhi = _ln_int_bounds(x.numerator, bits)
    dlo, dhi = _ln_int_bounds(x.denominator, bits)
    return nlo - dhi, nhi - dlo


def interval_pow(lo: Fraction, hi: Fraction, exp: Fraction, bits: int = 128) -> tuple[Fraction, Fraction]:
    """Enclosure of [lo, hi] ** exp for 0 < lo <= hi."""
    if lo <= 0:
        raise ValueError("interval_pow expects a positive interval")
    alo, ahi = pow_bounds(lo, exp, bits)
    blo, bhi = pow_bounds(hi, exp, bits)
    if exp >= 0:
        return alo, bhi
    return blo, ahi
