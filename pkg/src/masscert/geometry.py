"""Exact geometry of closed sup-norm balls (axis-aligned cubes) in Q^k.

All predicates are decided exactly over the rationals, including balls
whose radius is an irrational power like r ** (2/3): those route through
the radical-sign machinery in exactpow.  Lebesgue measure of a ball is
m(B) = (2r)^k; the k-volume is V^k(B) = r^k, so m = 2^k V^k exactly and
the comparability constants c1 = 1/2 < 1 < c2 = 2^k hold with room to
spare.  Union and difference measures are computed by sweep only for
rational data and only in dimensions 1 and 2; anything else is a
configuration error, not an approximation opportunity.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cmp_to_key
from typing import Iterable, Sequence

from .exactpow import (
    XR,
    Pow,
    ln_bounds,
    interval_pow,
    qpow,
    xr_cmp,
    xr_is_rational,
    xr_mul_q,
    xr_pow,
    xr_pow_int,
    xr_sign,
)


class GeometryError(ValueError):
    """Raised when geometric preconditions are violated."""


def _frac_tuple(xs: Iterable) -> tuple[Fraction, ...]:
    return tuple(Fraction(x) for x in xs)


@dataclass(frozen=True)
class Ball:
    """Closed sup-norm ball: the cube prod_i [c_i - r, c_i + r]."""

    center: tuple[Fraction, ...]
    radius: XR

    def __post_init__(self):
        object.__setattr__(self, "center", _frac_tuple(self.center))
        r = self.radius
        if not isinstance(r, Pow):
            r = Fraction(r)
            object.__setattr__(self, "radius", r)
            if r <= 0:
                raise GeometryError("ball radius must be positive")
        # Pow radii are positive by construction (positive coef, prime roots)
        elif r.coef <= 0:
            raise GeometryError("ball radius must be positive")

    @property
    def k(self) -> int:
        return len(self.center)

    def rational_radius(self) -> Fraction:
        if not xr_is_rational(self.radius):
            raise GeometryError("ball radius is irrational; exact sweep unavailable")
        return Fraction(self.radius)


def scale_ball(ball: Ball, factor: Fraction) -> Ball:
    """cB: same centre, radius scaled by c > 0."""
    factor = Fraction(factor)
    if factor <= 0:
        raise GeometryError("scale factor must be positive")
    return Ball(ball.center, xr_mul_q(ball.radius, factor))


def ball_measure(ball: Ball) -> XR:
    """Lebesgue measure m(B) = (2r)^k."""
    return xr_mul_q(xr_pow_int(ball.radius, ball.k), Fraction(2) ** ball.k)


def ball_volume(ball: Ball) -> XR:
    """V^k(B) = r^k."""
    return xr_pow_int(ball.radius, ball.k)


# --- predicates ------------------------------------------------------------


def _gap(a: Ball, b: Ball) -> list[Fraction]:
    if a.k != b.k:
        raise GeometryError("dimension mismatch")
    return [abs(x - y) for x, y in zip(a.center, b.center)]


def contains_point(ball: Ball, point: Sequence[Fraction]) -> bool:
    pt = _frac_tuple(point)
    if len(pt) != ball.k:
        raise GeometryError("dimension mismatch")
    r = ball.radius
    return all(xr_sign([(Fraction(1), r), (Fraction(-1), abs(x - c))]) >= 0 for x, c in zip(pt, ball.center))


def balls_intersect(a: Ball, b: Ball) -> bool:
    ra, rb = a.radius, b.radius
    if isinstance(ra, Fraction) and isinstance(rb, Fraction):
        s = ra + rb
        return all(d <= s for d in _gap(a, b))
    return all(
        xr_sign([(Fraction(1), ra), (Fraction(1), rb), (Fraction(-1), d)]) >= 0 for d in _gap(a, b)
    )


def balls_disjoint(a: Ball, b: Ball) -> bool:
    return not balls_intersect(a, b)


def contains_ball(outer: Ball, inner: Ball) -> bool:
    """inner subset of outer, both closed."""
    ro, ri = outer.radius, inner.radius
    if isinstance(ro, Fraction) and isinstance(ri, Fraction):
        s = ro - ri
        return s >= 0 and all(d <= s for d in _gap(outer, inner))
    return all(
        xr_sign([(Fraction(1), ro), (Fraction(-1), ri), (Fraction(-1), d)]) >= 0
        for d in _gap(outer, inner)
    )


# --- dimension functions ----------------------------------------------------


@dataclass(frozen=True)
class DimensionFunction:
    """f(r) = r^s, optionally log-corrected: r^s * ln(1/r)^a (for r < 1).

    s > 0 so f increases from f(0) = 0.  Power functions evaluate exactly
    (as radicals when irrational); log-corrected ones only admit certified
    enclosures, controlled by `bits`.
    """

    s: Fraction
    a: Fraction = Fraction(0)
    bits: int = 128

    def __post_init__(self):
        object.__setattr__(self, "s", Fraction(self.s))
        object.__setattr__(self, "a", Fraction(self.a))
        if self.s <= 0:
            raise GeometryError("dimension function needs exponent s > 0")

    @property
    def is_power(self) -> bool:
        return self.a == 0

    def value_xr(self, r: Fraction) -> XR:
        """Exact f(r) for rational r > 0; power kind only."""
        if not self.is_power:
            raise GeometryError("log-corrected f has no exact value; use value_bounds")
        return xr_pow(Fraction(r), self.s)

    def value_bounds(self, r: Fraction, bits: int | None = None) -> tuple[Fraction, Fraction]:
        """Certified enclosure of f(r) for rational r > 0."""
        r = Fraction(r)
        bits = bits or self.bits
        if self.is_power:
            lo, hi = interval_pow(r, r, self.s, bits)
            return lo, hi
        if r >= 1:
            raise GeometryError("log-corrected f is defined for r < 1 only")
        plo, phi = interval_pow(r, r, self.s, bits)
        llo, lhi = ln_bounds(1 / r, bits)
        if llo <= 0:
            raise GeometryError("ln(1/r) enclosure not positive; r too close to 1")
        clo, chi = interval_pow(llo, lhi, self.a, bits)
        return plo * clo, phi * chi

    def monotone_volume_ratio(self, k: int) -> str:
        """Behaviour of r^-k f(r) as r -> 0+: 'to_infinity', 'finite', or 'to_zero'.

        Structural check: the power part dominates any log correction.
        """
        if self.s < k:
            return "to_infinity"
        if self.s > k:
            return "to_zero"
        if self.a > 0:
            return "to_infinity"
        if self.a < 0:
            return "to_zero"
        return "finite"


def ratio_vanishes(f: DimensionFunction, g: DimensionFunction) -> bool:
    """Structural test that f(r)/g(r) -> 0 as r -> 0+ (power dominance)."""
    if f.s != g.s:
        return f.s > g.s
    return f.a < g.a


def f_volume(ball: Ball, f: DimensionFunction) -> XR:
    """V^f(B) = f(r(B)); exact for power f."""
    if not xr_is_rational(ball.radius):
        # f(r) for a radical radius: r = coef * prod p^e, so r^s needs a
        # general monomial power; only integer s stays closed-form.
        if f.is_power and f.s.denominator == 1:
            return xr_pow_int(ball.radius, int(f.s))
        raise GeometryError("f-volume of an irrational radius needs integer power f")
    return f.value_xr(ball.rational_radius())


def transform_ball(ball: Ball, f: DimensionFunction, g: DimensionFunction) -> Ball:
    """B^f = B(centre, g^{-1}(f(r))): same centre, volume-matched radius.

    g is the ambient volume gauge (g = r^k gives radius f(r)^(1/k)); it
    must be a pure power to invert.  The defining identity
    V^g(B^f) = V^f(B) then holds exactly, and is what tests check.
    """
    if not g.is_power:
        raise GeometryError("ambient gauge g must be a pure power to invert")
    if not f.is_power:
        raise GeometryError("transform needs power f for exact radii")
    r = ball.rational_radius()
    return Ball(ball.center, xr_pow(r, f.s / g.s))


# --- union / difference measure by sweep (rational boxes, k <= 2) ----------


def _boxes_from_balls(balls: Sequence[Ball]) -> list[tuple[tuple[Fraction, Fraction], ...]]:
    out = []
    for b in balls:
        r = b.rational_radius()
        out.append(tuple((c - r, c + r) for c in b.center))
    return out


def _interval_union_length(ivs: list[tuple[Fraction, Fraction]]) -> Fraction:
    total = Fraction(0)
    cur_lo = cur_hi = None
    for lo, hi in sorted(ivs):
        if hi <= lo:
            continue
        if cur_hi is None or lo > cur_hi:
            if cur_hi is not None:
                total += cur_hi - cur_lo
            cur_lo, cur_hi = lo, hi
        elif hi > cur_hi:
            cur_hi = hi
    if cur_hi is not None:
        total += cur_hi - cur_lo
    return total


def _box_union_measure(boxes: list[tuple[tuple[Fraction, Fraction], ...]], k: int) -> Fraction:
    boxes = [b for b in boxes if all(hi > lo for lo, hi in b)]
    if not boxes:
        return Fraction(0)
    if k == 1:
        return _interval_union_length([b[0] for b in boxes])
    if k == 2:
        # vertical strip decomposition on all x-breakpoints
        xs = sorted({e for b in boxes for e in b[0]})
        total = Fraction(0)
        for x0, x1 in zip(xs, xs[1:]):
            if x1 <= x0:
                continue
            ys = [b[1] for b in boxes if b[0][0] <= x0 and b[0][1] >= x1]
            if ys:
                total += (x1 - x0) * _interval_union_length(ys)
        return total
    raise GeometryError(f"exact union measure is implemented for k <= 2, got k={k}")


def union_measure(balls: Sequence[Ball]) -> Fraction:
    """Exact Lebesgue measure of a finite union of rational balls, k <= 2."""
    if not balls:
        return Fraction(0)
    k = balls[0].k
    if any(b.k != k for b in balls):
        raise GeometryError("dimension mismatch in union")
    return _box_union_measure(_boxes_from_balls(balls), k)


def diff_measure(ball: Ball, holes: Sequence[Ball]) -> Fraction:
    """Exact m(B \\ union(holes)) for rational data, k <= 2."""
    k = ball.k
    r = ball.rational_radius()
    outer = tuple((c - r, c + r) for c in ball.center)
    clipped = []
    for h in _boxes_from_balls(list(holes)):
        if len(h) != k:
            raise GeometryError("dimension mismatch in difference")
        box = tuple((max(lo, olo), min(hi, ohi)) for (lo, hi), (olo, ohi) in zip(h, outer))
        if all(hi > lo for lo, hi in box):
            clipped.append(box)
    m_ball = Fraction(2 * r) ** k
    return m_ball - _box_union_measure(clipped, k)


# --- 5r covering selection ---------------------------------------------------


def _radius_cmp(a: Ball, b: Ball) -> int:
    s = xr_cmp(b.radius, a.radius)  # descending radius
    if s:
        return s
    return (a.center > b.center) - (a.center < b.center)  # then lexicographic centre


def five_r_cover(balls: Sequence[Ball]) -> list[Ball]:
    """Greedy Vitali-type selection: scan by descending radius (ties by
    lexicographic centre), keep a ball iff disjoint from all kept ones.

    Every input ball then intersects a kept ball of radius >= its own, so
    it lies inside the 3-fold (a fortiori 5-fold) scaling of that ball.
    Deterministic; exact predicates throughout.
    """
    if not balls:
        return []
    k = balls[0].k
    if any(b.k != k for b in balls):
        raise GeometryError("dimension mismatch in cover input")
    order = sorted(balls, key=cmp_to_key(_radius_cmp))
    all_rational = all(xr_is_rational(b.radius) for b in balls)
    kept: list[Ball] = []
    if k == 1 and all_rational:
        # kept centres in increasing order; only neighbours within
        # c +- (r + r_max) can intersect, found by bisection
        import bisect

        xs: list[Fraction] = []
        byx: list[Ball] = []
        rmax = Fraction(0)
        for b in order:
            c = b.center[0]
            r = Fraction(b.radius)
            w = r + rmax
            i = bisect.bisect_left(xs, c - w)
            j = bisect.bisect_right(xs, c + w)
            if all(abs(c - o.center[0]) > r + Fraction(o.radius) for o in byx[i:j]):
                pos = bisect.bisect_left(xs, c)
                xs.insert(pos, c)
                byx.insert(pos, b)
                kept.append(b)
                rmax = max(rmax, r)
        return kept
    for b in order:
        if all(balls_disjoint(b, o) for o in kept):
            kept.append(b)
    return kept


def cover_witnesses(balls: Sequence[Ball], kept: Sequence[Ball]) -> list[int]:
    """For each input ball, index of a kept ball whose 5-scaling contains it.

    Proves union(inputs) subset union(5 * kept) exactly; raises if any
    witness is missing (which would mean the selection is not a cover).
    """
    out = []
    for b in balls:
        for i, g in enumerate(kept):
            if xr_cmp(g.radius, b.radius) >= 0 and balls_intersect(b, g) and contains_ball(scale_ball(g, 5), b):
                out.append(i)
                break
        else:
            raise GeometryError("5r cover witness missing")
    return out


# --- covering-lemma check ----------------------------------------------------


def geometric_containment_check(a: Ball, m: Ball, c: Fraction) -> tuple[bool, bool]:
    """For balls with A meeting M, A not inside cM, and c >= 3:
    conclude r(M) <= r(A) and cM inside 5A.  Returns the two conclusion
    flags after exactly verifying the preconditions; raises on violated
    preconditions.  The triangle-inequality proof works verbatim in the
    sup norm.
    """
    c = Fraction(c)
    if c < 3:
        raise GeometryError("containment lemma needs c >= 3")
    if not balls_intersect(a, m):
        raise GeometryError("precondition failed: A and M must intersect")
    if contains_ball(scale_ball(m, c), a):
        raise GeometryError("precondition failed: A must not be contained in cM")
    r_small = xr_cmp(m.radius, a.radius) <= 0
    contained = contains_ball(scale_ball(a, 5), scale_ball(m, c))
    return r_small, contained
