"""Rational points, approximating functions, and the ball families they span.

A family collects the balls B(p/q, psi(q)/q) over rational points p/q in
the unit cube, ordered by q ascending then p lexicographic, each point
appearing exactly once.  Two coprimality modes are supported: PAIRWISE
(every coordinate numerator coprime to q) and JOINT (the vector gcd with
q is 1).  A dyadic family of shrinking generations is provided as well;
it is the simplest family whose limsup is everything, which makes it the
reference input for covering-selection tests.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from math import gcd
from typing import Iterator, Optional, Sequence

from . import _kernels
from .exactpow import XR, factorint, qpow, xr_mul_q, xr_pow
from .geometry import Ball, DimensionFunction, GeometryError


class DiophantineError(ValueError):
    pass


class NotExactlyRational(DiophantineError):
    """An evaluation left the rationals; exact mode cannot continue."""


class CoprimeMode(str, Enum):
    PAIRWISE = "pairwise"
    JOINT = "joint"


# ---------------------------------------------------------------------------
# approximating functions


@dataclass(frozen=True)
class ApproximatingFunction:
    """psi: {1, 2, ...} -> Q+, either q ** -tau or an explicit table.

    Power evaluation is exact-or-error: q ** -tau must be rational at
    every q actually used (integer tau always is).
    """

    tau: Optional[Fraction] = None
    table: Optional[tuple[Fraction, ...]] = None

    def __post_init__(self):
        if (self.tau is None) == (self.table is None):
            raise DiophantineError("exactly one of tau/table must be given")
        if self.tau is not None:
            object.__setattr__(self, "tau", Fraction(self.tau))
        else:
            vals = tuple(Fraction(v) for v in self.table)
            if not vals or any(v <= 0 for v in vals):
                raise DiophantineError("table values must be positive")
            object.__setattr__(self, "table", vals)

    @classmethod
    def power(cls, tau) -> "ApproximatingFunction":
        return cls(tau=Fraction(tau))

    @classmethod
    def from_table(cls, values: Sequence) -> "ApproximatingFunction":
        return cls(table=tuple(Fraction(v) for v in values))

    @property
    def is_power(self) -> bool:
        return self.tau is not None

    @property
    def domain_cap(self) -> Optional[int]:
        return None if self.table is None else len(self.table)

    def value(self, q: int) -> Fraction:
        """Exact psi(q); raises NotExactlyRational for irrational powers."""
        if q < 1:
            raise DiophantineError("psi is defined on q >= 1")
        if self.table is not None:
            if q > len(self.table):
                raise DiophantineError(f"psi table has no entry for q={q}")
            return self.table[q - 1]
        v = qpow(Fraction(q), -self.tau)
        if v is None:
            raise NotExactlyRational(f"psi(q)=q**-{self.tau} is irrational at q={q}")
        return v

    def value_xr(self, q: int) -> XR:
        if self.table is not None:
            return self.value(q)
        return xr_pow(Fraction(q), -self.tau)


def theta_transform(psi: ApproximatingFunction, f: DimensionFunction, k: int) -> ApproximatingFunction:
    """The volume-matching rescaling theta(q) = q * f(psi(q)/q)^(1/k).

    Replacing psi by theta turns the Hausdorff f-volume sum for psi into
    the Lebesgue-type sum for theta.  For psi = q**-tau and f = r**s this
    is exact exponent arithmetic: theta = q ** -(s(1+tau)/k - 1).
    """
    if not f.is_power:
        raise GeometryError("theta transform needs power f")
    if k < 1:
        raise DiophantineError("k >= 1 required")
    if psi.is_power:
        return ApproximatingFunction.power(f.s * (1 + psi.tau) / k - 1)
    vals = []
    for q in range(1, len(psi.table) + 1):
        v = qpow(psi.table[q - 1] / q, f.s / k)
        if v is None:
            raise NotExactlyRational(
                f"theta(q) irrational at q={q}; use a power psi or rationalisable table"
            )
        vals.append(q * v)
    return ApproximatingFunction.from_table(vals)


def theta_identity_holds(psi: ApproximatingFunction, f: DimensionFunction, k: int, q: int) -> bool:
    """Exact pointwise check theta(q) == q * f(psi(q)/q)^(1/k)."""
    theta = theta_transform(psi, f, k)
    lhs = theta.value_xr(q)
    rhs = xr_mul_q(xr_pow(psi.value(q) / q, f.s / Fraction(k)), Fraction(q))
    from .exactpow import xr_cmp

    return xr_cmp(lhs, rhs) == 0


# ---------------------------------------------------------------------------
# number theory


def euler_phi(n: int) -> int:
    """Euler totient via factorisation."""
    if n < 1:
        raise DiophantineError("phi is defined on n >= 1")
    out = n
    for p in factorint(n):
        out -= out // p
    return out


def _mobius_sieve(n: int) -> list[int]:
    spf = _kernels.smallest_prime_factors(max(n, 1))
    mu = [0] * (n + 1)
    if n >= 1:
        mu[1] = 1
    for m in range(2, n + 1):
        p = int(spf[m])
        r = m // p
        mu[m] = 0 if r % p == 0 else -mu[r]
    return mu


def _squarefree_divisors(q: int) -> list[tuple[int, int]]:
    """(d, mu(d)) over squarefree divisors d of q."""
    out = [(1, 1)]
    for p in factorint(q):
        out += [(d * p, -s) for d, s in out]
    return out


def _coprime_count_upto(q: int, x: int) -> int:
    """#{1 <= j <= x : gcd(j, q) = 1} by Moebius inversion over d | q."""
    if x <= 0:
        return 0
    return sum(s * (x // d) for d, s in _squarefree_divisors(q))


@dataclass(frozen=True)
class RationalPoint:
    """The representation (p_1, ..., p_k; q) of the point (p_i / q)_i."""

    p: tuple[int, ...]
    q: int

    def fractions(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(pi, self.q) for pi in self.p)


def _block_residues(q: int) -> list[int]:
    """Numerators usable in PAIRWISE mode: 0 <= p <= q with gcd(p, q) = 1."""
    if q == 1:
        return [0, 1]
    mask = _kernels.coprime_mask(q)
    return [p for p in range(q + 1) if mask[p]]


def enumerate_rationals(k: int, q_max: int, mode: CoprimeMode = CoprimeMode.PAIRWISE) -> Iterator[RationalPoint]:
    """All admissible points with denominator <= q_max, each exactly once,
    ordered by q ascending then numerator vector lexicographic.

    Uniqueness needs no dedup: in either mode the admissible (p, q)
    representation of a point pins down q.
    """
    if k < 1 or q_max < 1:
        raise DiophantineError("need k >= 1 and q_max >= 1")
    mode = CoprimeMode(mode)
    for q in range(1, q_max + 1):
        if mode is CoprimeMode.PAIRWISE:
            res = _block_residues(q)
            for vec in itertools.product(res, repeat=k):
                yield RationalPoint(vec, q)
        else:
            for vec in itertools.product(range(q + 1), repeat=k):
                g = 0
                for v in vec:
                    g = gcd(g, v)
                if gcd(g, q) == 1:
                    yield RationalPoint(vec, q)


def count_rationals(k: int, q_max: int, mode: CoprimeMode = CoprimeMode.PAIRWISE) -> int:
    """Cardinality of enumerate_rationals without materialising it.

    PAIRWISE: 2^k + sum phi(q)^k.  JOINT: per q, Moebius inversion
    sum_{d | q} mu(d) (q/d + 1)^k counts vectors in [0, q]^k whose joint
    gcd with q is 1.
    """
    if k < 1 or q_max < 1:
        raise DiophantineError("need k >= 1 and q_max >= 1")
    mode = CoprimeMode(mode)
    if mode is CoprimeMode.PAIRWISE:
        phi = _kernels.totient_sieve(q_max)
        return 2**k + sum(int(phi[q]) ** k for q in range(2, q_max + 1))
    total = 0
    for q in range(1, q_max + 1):
        total += sum(s * (q // d + 1) ** k for d, s in _squarefree_divisors(q))
    return total


def count_solutions(
    y: Sequence[Fraction],
    psi: ApproximatingFunction,
    q_max: int,
    mode: CoprimeMode = CoprimeMode.PAIRWISE,
) -> int:
    """Number of admissible (p, q), q <= q_max, with |y_i - p_i/q| < psi(q)/q
    for every coordinate (strict, exact rational comparisons).
    """
    y = tuple(Fraction(v) for v in y)
    k = len(y)
    if k < 1:
        raise DiophantineError("y must have at least one coordinate")
    mode = CoprimeMode(mode)
    total = 0
    for q in range(1, q_max + 1):
        w = psi.value(q)
        windows: list[range] = []
        empty = False
        for yi in y:
            # p in (q*yi - w, q*yi + w) intersect [0, q]
            lo_f = q * yi - w
            hi_f = q * yi + w
            lo = max(0, _strict_ceil(lo_f))
            hi = min(q, _strict_floor(hi_f))
            if lo > hi:
                empty = True
                break
            windows.append(range(lo, hi + 1))
        if empty:
            continue
        if mode is CoprimeMode.PAIRWISE:
            prod = 1
            for rng in windows:
                cnt = sum(1 for p in rng if (q == 1 and p in (0, 1)) or (q > 1 and gcd(p, q) == 1))
                prod *= cnt
                if prod == 0:
                    break
            total += prod
        else:
            for vec in itertools.product(*windows):
                g = 0
                for v in vec:
                    g = gcd(g, v)
                if gcd(g, q) == 1:
                    total += 1
    return total


def _strict_ceil(x: Fraction) -> int:
    """Smallest integer strictly greater than x."""
    n = x.numerator // x.denominator
    return n + 1


def _strict_floor(x: Fraction) -> int:
    """Largest integer strictly less than x."""
    n = -((-x.numerator) // x.denominator)  # ceil(x)
    return n - 1


# ---------------------------------------------------------------------------
# ball families


class BallFamily:
    """Ordered countable family of balls, grouped in blocks of equal radius.

    Blocks are indexed by an integer key (denominator q, or dyadic
    generation g) with 1-based global ball indices.  The radius envelope
    env(b) = max over blocks >= b of the block radius is non-increasing,
    which is what selection-threshold scans rely on.  Finite cap only;
    infinite tails are out of scope.
    """

    k: int

    def block_keys(self) -> range:
        raise NotImplementedError

    def block_radius(self, b: int) -> Fraction:
        raise NotImplementedError

    def block_size(self, b: int) -> int:
        raise NotImplementedError

    def iter_block(self, b: int) -> Iterator[tuple[int, Ball]]:
        raise NotImplementedError

    def iter_block_window(self, b: int, window: Sequence[tuple[Fraction, Fraction]]) -> Iterator[tuple[int, Ball]]:
        """Block members whose centres lie in the closed coordinate window."""
        for idx, ball in self.iter_block(b):
            if all(lo <= c <= hi for c, (lo, hi) in zip(ball.center, window)):
                yield idx, ball

    # --- shared machinery ---

    def index_start(self, b: int) -> int:
        raise NotImplementedError

    def total(self) -> int:
        ks = self.block_keys()
        last = ks[-1]
        return self.index_start(last) + self.block_size(last) - 1

    def envelope(self, b: int) -> Fraction:
        raise NotImplementedError

    def envelope_at_index(self, i: int) -> Fraction:
        return self.envelope(self.block_of_index(i))

    def block_of_index(self, i: int) -> int:
        ks = self.block_keys()
        lo, hi = 0, len(ks) - 1
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if self.index_start(ks[mid]) <= i:
                lo = mid
            else:
                hi = mid - 1
        return ks[lo]


class FareyBallFamily(BallFamily):
    """Balls B(p/q, psi(q)/q) over admissible rational points in [0,1]^k."""

    def __init__(self, psi: ApproximatingFunction, k: int, mode: CoprimeMode, q_cap: int):
        if k < 1:
            raise DiophantineError("k >= 1 required")
        if q_cap < 1:
            raise DiophantineError("q_cap >= 1 required")
        if psi.domain_cap is not None and q_cap > psi.domain_cap:
            raise DiophantineError("q_cap exceeds psi table domain")
        self.psi = psi
        self.k = k
        self.mode = CoprimeMode(mode)
        self.q_cap = q_cap
        self._radii = [Fraction(0)] * (q_cap + 1)
        for q in range(1, q_cap + 1):
            r = psi.value(q) / q
            if r <= 0:
                raise DiophantineError("ball radii must be positive")
            self._radii[q] = r
        # suffix maxima give the non-increasing envelope
        self._env = list(self._radii)
        for q in range(q_cap - 1, 0, -1):
            self._env[q] = max(self._env[q], self._env[q + 1])
        if self.mode is CoprimeMode.PAIRWISE:
            phi = _kernels.totient_sieve(q_cap)
            sizes = [0, 2**k] + [int(phi[q]) ** k for q in range(2, q_cap + 1)]
        else:
            sizes = [0] + [
                sum(s * (q // d + 1) ** k for d, s in _squarefree_divisors(q))
                for q in range(1, q_cap + 1)
            ]
        self._starts = [0, 1]
        for q in range(1, q_cap):
            self._starts.append(self._starts[-1] + sizes[q])
        self._sizes = sizes

    def block_keys(self) -> range:
        return range(1, self.q_cap + 1)

    def block_radius(self, b: int) -> Fraction:
        return self._radii[b]

    def block_size(self, b: int) -> int:
        return self._sizes[b]

    def envelope(self, b: int) -> Fraction:
        return self._env[b]

    def index_start(self, b: int) -> int:
        return self._starts[b]

    def point_ball(self, pt: RationalPoint) -> Ball:
        return Ball(pt.fractions(), self._radii[pt.q])

    def iter_block(self, q: int) -> Iterator[tuple[int, Ball]]:
        start = self.index_start(q)
        r = self._radii[q]
        if self.mode is CoprimeMode.PAIRWISE:
            res = _block_residues(q)
            for off, vec in enumerate(itertools.product(res, repeat=self.k)):
                yield start + off, Ball(tuple(Fraction(p, q) for p in vec), r)
        else:
            off = 0
            for vec in itertools.product(range(q + 1), repeat=self.k):
                g = 0
                for v in vec:
                    g = gcd(g, v)
                if gcd(g, q) == 1:
                    yield start + off, Ball(tuple(Fraction(p, q) for p in vec), r)
                    off += 1

    def iter_block_window(self, q: int, window: Sequence[tuple[Fraction, Fraction]]) -> Iterator[tuple[int, Ball]]:
        if self.k != 1 or self.mode is not CoprimeMode.PAIRWISE:
            yield from super().iter_block_window(q, window)
            return
        # fast path: numerators in [ceil(q*lo), floor(q*hi)], rank by
        # coprime counting so global indices stay exact
        (lo, hi), = window
        p_lo = max(0, -((-lo.numerator * q) // lo.denominator))  # ceil(q*lo)
        p_hi = min(q, (hi.numerator * q) // hi.denominator)  # floor(q*hi)
        if p_lo > p_hi:
            return
        start = self.index_start(q)
        r = self._radii[q]
        if q == 1:
            for p in (0, 1):
                if p_lo <= p <= p_hi:
                    yield start + p, Ball((Fraction(p, 1),), r)
            return
        rank = _coprime_count_upto(q, p_lo - 1)
        for p in range(p_lo, p_hi + 1):
            if gcd(p, q) == 1:
                yield start + rank, Ball((Fraction(p, q),), r)
                rank += 1

    def manifest(self) -> dict:
        psi_doc = (
            {"kind": "power", "tau": str(self.psi.tau)}
            if self.psi.is_power
            else {"kind": "table", "values": [str(v) for v in self.psi.table]}
        )
        return {
            "family": "farey",
            "psi": psi_doc,
            "k": self.k,
            "mode": self.mode.value,
            "q_cap": self.q_cap,
            "count": self.total(),
        }


class DyadicBallFamily(BallFamily):
    """Generation-g balls B((2j+1)/2^(g+1), 2^-(g+1)*radius_power) on [0,1]^k.

    With radius_power=1 every generation tiles the cube.  Larger powers
    shrink the balls below the center spacing, the dyadic analogue of a
    faster approximating function.
    """

    def __init__(self, k: int, g_min: int = 1, g_cap: int = 30, radius_power: int = 1):
        if k < 1 or g_min < 0 or g_cap < g_min or radius_power < 1:
            raise DiophantineError("bad dyadic family parameters")
        self.k = k
        self.g_min = g_min
        self.g_cap = g_cap
        self.radius_power = radius_power

    def block_keys(self) -> range:
        return range(self.g_min, self.g_cap + 1)

    def block_radius(self, g: int) -> Fraction:
        return Fraction(1, 2 ** ((g + 1) * self.radius_power))

    def envelope(self, g: int) -> Fraction:
        return self.block_radius(g)

    def block_size(self, g: int) -> int:
        return (2**g) ** self.k

    def index_start(self, g: int) -> int:
        # sum of 2^(g'k) for g_min <= g' < g, plus 1
        return 1 + sum(2 ** (gp * self.k) for gp in range(self.g_min, g))

    def iter_block(self, g: int) -> Iterator[tuple[int, Ball]]:
        start = self.index_start(g)
        r = self.block_radius(g)
        side = 2**g
        for off, vec in enumerate(itertools.product(range(side), repeat=self.k)):
            center = tuple(Fraction(2 * j + 1, 2 ** (g + 1)) for j in vec)
            yield start + off, Ball(center, r)

    def iter_block_window(self, g: int, window: Sequence[tuple[Fraction, Fraction]]) -> Iterator[tuple[int, Ball]]:
        side = 2**g
        ranges = []
        for lo, hi in window:
            # (2j+1)/2^(g+1) in [lo, hi]
            j_lo = max(0, -((-(lo.numerator * 2 ** (g + 1) - lo.denominator)) // (2 * lo.denominator)))
            j_hi = min(side - 1, (hi.numerator * 2 ** (g + 1) - hi.denominator) // (2 * hi.denominator))
            if j_lo > j_hi:
                return
            ranges.append(range(j_lo, j_hi + 1))
        start = self.index_start(g)
        r = self.block_radius(g)
        for vec in itertools.product(*ranges):
            off = 0
            for j in vec:
                off = off * side + j
            center = tuple(Fraction(2 * j + 1, 2 ** (g + 1)) for j in vec)
            yield start + off, Ball(center, r)

    def manifest(self) -> dict:
        return {
            "family": "dyadic",
            "k": self.k,
            "g_min": self.g_min,
            "g_cap": self.g_cap,
            "radius_power": self.radius_power,
            "count": self.total(),
        }


def ball_family(
    psi: ApproximatingFunction,
    k: int,
    mode: CoprimeMode = CoprimeMode.PAIRWISE,
    q_cap: int = 100,
) -> FareyBallFamily:
    """The family of balls B(p/q, psi(q)/q) up to denominator q_cap."""
    return FareyBallFamily(psi, k, mode, q_cap)
