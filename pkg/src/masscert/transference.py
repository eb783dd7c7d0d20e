"""Nested finite ball construction carrying a recursively split measure.

Given a block-ordered ball family and a volume gauge f with r^-k f(r) -> oo,
this module builds a finite tree of family balls: inside the current region
it selects a disjoint subfamily of f-transforms capturing a fixed measure
fraction, then repeatedly packs the untouched part of the half region with
small sub-balls and selects again inside each, until every sub-level meets
an exact transformed-volume quota.  The natural weights on the tree give a
measure; every inequality the construction relies on is decided in exact
arithmetic and recorded as a flag, never asserted from floats.

Two parameter modes exist.  "faithful" wires the selection and quota
constants to the ambient-comparability constants c1, c2; the resulting
branching factors are astronomically large unless eta is tiny, so full
faithful trees are only practical at depth 2.  "demo" caps the sub-level
count and relaxes kappa, c3, epsilon to user-supplied values; when the
truncated family simply has no ball small enough for the packing scale a
demo build also closes the local level early and records that, instead of
failing.  All structural flags are still checked exactly either way, but in
demo mode the per-node measure bound is expected to fail below the root
(the certificate records the downgrade).
"""

from __future__ import annotations

import random
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

from .diophantine import BallFamily
from .exactpow import (
    XR,
    xr_bounds,
    xr_cmp,
    xr_floor,
    xr_inv,
    xr_is_rational,
    xr_mul,
    xr_mul_q,
    xr_pow,
    xr_sign,
)
from .geometry import (
    Ball,
    DimensionFunction,
    ball_measure,
    ball_volume,
    balls_disjoint,
    balls_intersect,
    contains_ball,
    f_volume,
    scale_ball,
)


class TransferenceError(Exception):
    """Base class for construction failures."""


class BudgetExhausted(TransferenceError):
    """The family (or the index budget) ran out before a capture target."""


class FreeRegionDeficit(TransferenceError):
    """The region left after removing the 4-fold enlargements is too small."""


class PackingDeficit(TransferenceError):
    """The lattice packing of the free region missed its measure target."""


class SelectionError(TransferenceError):
    """A selection invariant failed after truncation (should not happen)."""


class ComparableMeasures(TransferenceError):
    """f(r) is comparable to r^k, so the transfer construction is vacuous.

    When r^-k f(r) stays bounded the f-volume never exceeds the ambient
    volume locally and the full-measure statement follows directly; the
    construction is skipped and callers should report this case as such.
    """


# ---------------------------------------------------------------------------
# parameters

_DEMO_KAPPA = Fraction(1, 50)
_DEMO_C3 = Fraction(1, 200000)
_DEMO_EPSILON = Fraction(1, 4)
_DEMO_SUBLEVEL_CAP = 2

# Bundle selections inside a packed sub-ball only look for balls within this
# factor of the packing scale; anything smaller belongs to later levels, so a
# centre with nothing in that scale window is barren rather than an excuse to
# recurse arbitrarily deep.  This is a budget in scale, the analogue of
# index_budget in radius terms.
_BUNDLE_FLOOR = Fraction(1, 16)


@dataclass(frozen=True)
class ConstructionParams:
    """Mode, constants and budgets for one construction run.

    c1 <= c2 are the ambient comparability constants (measure of a ball of
    radius r sits between c1*(2r)^k and c2*(2r)^k; for Lebesgue on sup-norm
    balls both are 1, the defaults keep the conventional slack c1=1/2,
    c2=2^k).  kappa is the captured-measure fraction per selection, c3 the
    per-sub-level transformed-volume quota, epsilon the volume-ratio
    shrinkage between consecutive levels.  In faithful mode all three are
    derived from c1, c2, k; in demo mode they are free dials.
    """

    k: int = 1
    eta: Fraction = Fraction(2)
    depth: int = 3
    mode: str = "demo"
    c1: Fraction = Fraction(1, 2)
    c2: Fraction = Fraction(0)  # sentinel: default 2^k
    kappa_override: Fraction | None = None
    c3_override: Fraction | None = None
    epsilon_override: Fraction | None = None
    sublevel_cap: int | None = None
    index_budget: int = 50_000_000
    mu_bits: int = 192

    def __post_init__(self):
        object.__setattr__(self, "eta", Fraction(self.eta))
        object.__setattr__(self, "c1", Fraction(self.c1))
        c2 = Fraction(self.c2)
        if c2 == 0:
            c2 = Fraction(2) ** self.k
        object.__setattr__(self, "c2", c2)
        if self.k < 1:
            raise TransferenceError("k >= 1 required")
        if self.depth < 1:
            raise TransferenceError("depth >= 1 required")
        if self.eta <= 0 or self.c1 <= 0 or c2 < self.c1:
            raise TransferenceError("need eta > 0 and 0 < c1 <= c2")
        if self.mode not in ("faithful", "demo"):
            raise TransferenceError("mode must be 'faithful' or 'demo'")
        if self.mode == "faithful":
            if any(
                v is not None
                for v in (self.kappa_override, self.c3_override, self.epsilon_override, self.sublevel_cap)
            ):
                raise TransferenceError("faithful mode admits no overrides")
        else:
            if self.kappa_override is None:
                object.__setattr__(self, "kappa_override", _DEMO_KAPPA)
            else:
                object.__setattr__(self, "kappa_override", Fraction(self.kappa_override))
            if self.c3_override is None:
                object.__setattr__(self, "c3_override", _DEMO_C3)
            else:
                object.__setattr__(self, "c3_override", Fraction(self.c3_override))
            if self.epsilon_override is None:
                object.__setattr__(self, "epsilon_override", _DEMO_EPSILON)
            else:
                object.__setattr__(self, "epsilon_override", Fraction(self.epsilon_override))
            if self.sublevel_cap is None:
                object.__setattr__(self, "sublevel_cap", _DEMO_SUBLEVEL_CAP)
            if self.sublevel_cap < 2:
                raise TransferenceError("sublevel cap must be at least 2")
        if not 0 < self.kappa < 1:
            raise TransferenceError("kappa must lie in (0, 1)")
        if not 0 < self.c3 <= self.kappa:
            raise TransferenceError("need 0 < c3 <= kappa")

    @property
    def kappa(self) -> Fraction:
        if self.kappa_override is not None:
            return self.kappa_override
        return Fraction(1, 2) * (self.c1 / self.c2) ** 2 / Fraction(10) ** self.k

    @property
    def c3(self) -> Fraction:
        if self.c3_override is not None:
            return self.c3_override
        kappa = Fraction(1, 2) * (self.c1 / self.c2) ** 2 / Fraction(10) ** self.k
        return kappa * self.c1**2 / (2 * self.c2**2 * Fraction(10) ** self.k)

    @property
    def epsilon_base(self) -> Fraction:
        """Volume-ratio shrinkage used away from the root."""
        if self.epsilon_override is not None:
            return self.epsilon_override
        return Fraction(1, 2) * (self.c1 / self.c2) ** 2 * self.c3 / (Fraction(2) ** self.k * Fraction(4) ** self.k)

    @property
    def mass_constant(self) -> Fraction:
        """The comparison constant 2 + 2*5^k*c2/(c1*c3) for sampled ratios."""
        return 2 + 2 * Fraction(5) ** self.k * self.c2 / (self.c1 * self.c3)


def epsilon_for(params: ConstructionParams, root_vf: XR, is_root: bool) -> XR:
    """Shrinkage constant; the root run scales it by V^f(root)/eta."""
    base = params.epsilon_base
    if not is_root:
        return base
    return xr_mul_q(root_vf, base / params.eta)


# ---------------------------------------------------------------------------
# exact sum accumulator


class _XSum:
    """Running sum of exact values; comparisons never leave exact arithmetic."""

    __slots__ = ("rat", "irr")

    def __init__(self):
        self.rat = Fraction(0)
        self.irr: list[XR] = []

    def add(self, x: XR) -> None:
        if xr_is_rational(x):
            self.rat += Fraction(x)
        else:
            self.irr.append(x)

    def parts(self) -> list[tuple[Fraction, XR]]:
        out: list[tuple[Fraction, XR]] = []
        if self.rat:
            out.append((Fraction(1), self.rat))
        out.extend((Fraction(1), t) for t in self.irr)
        return out

    def cmp_parts(self, other: Sequence[tuple[Fraction, XR]]) -> int:
        """Sign of (self - sum(scale * value))."""
        if not self.irr and all(xr_is_rational(x) for _, x in other):
            rhs = sum((Fraction(s) * Fraction(x) for s, x in other), Fraction(0))
            return (self.rat > rhs) - (self.rat < rhs)
        neg = [(-Fraction(s), x) for s, x in other]
        return xr_sign(self.parts() + neg)

    def value(self) -> Fraction | None:
        return self.rat if not self.irr else None

    def bounds(self, bits: int = 128) -> tuple[Fraction, Fraction]:
        lo = hi = self.rat
        for t in self.irr:
            tlo, thi = xr_bounds(t, bits)
            lo += tlo
            hi += thi
        return lo, hi


def _parts_cmp(a: Sequence[tuple[Fraction, XR]], b: Sequence[tuple[Fraction, XR]]) -> int:
    acc = _XSum()
    for s, x in a:
        acc.add(xr_mul_q(x, s))
    return acc.cmp_parts(list(b))


# ---------------------------------------------------------------------------
# selection thresholds


def transformed_radius(r: Fraction, f: DimensionFunction, k: int) -> XR:
    """Radius of B^f: f(r)^(1/k), so that V^k(B^f) = f(r) exactly."""
    return xr_pow(Fraction(r), f.s / k)


def transform(ball: Ball, f: DimensionFunction, k: int) -> Ball:
    return Ball(ball.center, transformed_radius(ball.rational_radius(), f, k))


def _first_block(family: BallFamily, pred) -> int | None:
    """First block key whose radius envelope satisfies a monotone predicate.

    pred(radius) must be downward closed (true stays true as r shrinks);
    the envelope is non-increasing, so binary search applies.
    """
    keys = family.block_keys()
    n = len(keys)
    if n == 0 or not pred(family.envelope(keys[n - 1])):
        return None
    lo, hi = 0, n - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if pred(family.envelope(keys[mid])):
            hi = mid
        else:
            lo = mid + 1
    return keys[lo]


def selection_start(
    family: BallFamily,
    region: Ball,
    f: DimensionFunction,
    params: ConstructionParams,
    epsilon: XR,
) -> int:
    """Smallest safe start index: every later ball is swallowed by its
    transform (3r < f(r)^(1/k)), has volume ratio below epsilon times the
    region's, and already earns at least two sub-levels of its own."""
    k = params.k
    vk_region = ball_volume(region)
    vf_region = f_volume(region, f)
    c3 = params.c3

    def good(e: Fraction) -> bool:
        if e <= 0:
            return True
        rho = transformed_radius(e, f, k)
        # 3e < rho
        if xr_sign([(Fraction(1), rho), (Fraction(-3), Fraction(e))]) <= 0:
            return False
        # e^k / f(e) < epsilon * vk_region / vf_region, cross-multiplied
        lhs = xr_mul(Fraction(e) ** k, vf_region)
        rhs = xr_mul(xr_mul(epsilon, vk_region), xr_pow(Fraction(e), f.s))
        if xr_cmp(lhs, rhs) >= 0:
            return False
        # f(e) >= c3 * e^k so the next sub-level count is at least 2
        if xr_sign([(Fraction(1), xr_pow(Fraction(e), f.s)), (-c3, Fraction(e) ** k)]) < 0:
            return False
        return True

    b = _first_block(family, good)
    if b is None:
        raise BudgetExhausted("no block of the family satisfies the selection thresholds")
    start = family.index_start(b)
    if start > params.index_budget:
        raise BudgetExhausted("selection start exceeds the index budget")
    return start


def shrunken_start(
    family: BallFamily,
    f: DimensionFunction,
    min_vf: XR,
    floor_index: int,
    params: ConstructionParams,
) -> int:
    """Start index beyond which f-volumes are at most half the current
    minimum over the local level (keeps consecutive sub-levels shrinking)."""

    def good(e: Fraction) -> bool:
        if e <= 0:
            return True
        return xr_sign([(Fraction(1), xr_pow(Fraction(e), f.s)), (Fraction(-1, 2), min_vf)]) <= 0

    b = _first_block(family, good)
    if b is None:
        raise BudgetExhausted("no block shrinks below half the current minimum f-volume")
    start = max(floor_index, family.index_start(b))
    if start > params.index_budget:
        raise BudgetExhausted("shrunken start exceeds the index budget")
    return start


def prescribed_sublevels(
    node_ball: Ball,
    f: DimensionFunction,
    params: ConstructionParams,
    is_root: bool,
) -> int:
    """How many sub-levels the local level at this ball must produce."""
    if is_root:
        m0 = Fraction(ball_measure(node_ball))
        count = (params.c2 * params.eta / (params.c3 * m0)).__floor__() + 1
    else:
        ratio = xr_mul(f_volume(node_ball, f), xr_mul_q(xr_inv(ball_volume(node_ball)), 1 / params.c3))
        count = xr_floor(ratio) + 1
    if params.sublevel_cap is not None:
        count = min(count, params.sublevel_cap)
    return count


# ---------------------------------------------------------------------------
# capture selection


@dataclass
class Selection:
    """A finite disjoint selection with its truncation point."""

    start: int
    indices: list[int]
    balls: list[Ball]
    regions: list[Ball]  # the f-transforms, in index order
    truncated_at: int  # smallest index whose selected tail is below kappa*m
    blocks_scanned: int
    candidates_seen: int

    def kept_measure_parts(self) -> list[tuple[Fraction, XR]]:
        return [(Fraction(1), ball_measure(t)) for t in self.regions]


def select_capture(
    family: BallFamily,
    region: Ball,
    f: DimensionFunction,
    params: ConstructionParams,
    start: int,
    stop_factor: Fraction = Fraction(2),
    floor_radius: XR | None = None,
) -> Selection:
    """Greedy disjoint selection of family balls with index >= start whose
    f-transforms lie inside `region` and touch its half, gathered until the
    transformed measure reaches stop_factor*kappa*m(region), then truncated
    at the smallest index past which the kept tail drops below
    kappa*m(region).  All comparisons are exact.

    floor_radius, when given, ends the scan once every remaining transform
    is smaller than it (a scale budget on top of the index budget).
    """
    k = region.k
    if family.k != k:
        raise TransferenceError("family dimension mismatch")
    if not f.is_power:
        raise TransferenceError("capture selection needs a pure power gauge")
    kappa = params.kappa
    m_region = ball_measure(region)
    target = [(stop_factor * kappa, m_region)]
    floor_parts = [(kappa, m_region)]
    half = scale_ball(region, Fraction(1, 2))
    r_hi = xr_bounds(region.radius, 64)[1]

    def fits(e: Fraction) -> bool:
        # strictly smaller: a transform as large as the region could only be
        # the region itself again (same centre forced by containment), and a
        # selection that returns its own region refines nothing
        if e <= 0:
            return True
        return xr_cmp(transformed_radius(e, f, k), region.radius) < 0

    first = _first_block(family, fits)
    if first is None:
        raise BudgetExhausted("no transformed ball fits inside the region")
    start_block = family.block_of_index(max(start, 1))
    keys = family.block_keys()
    from_key = max(first, start_block)

    selected: list[tuple[int, Ball, Ball]] = []  # (index, ball, transform)
    acc = _XSum()
    reached = False
    stopped = None  # budget that ended the scan early, if any
    blocks_scanned = 0
    cand_seen = 0

    for b in keys[keys.index(from_key):]:
        if family.index_start(b) > params.index_budget:
            stopped = "index budget hit"
            break
        if floor_radius is not None and xr_cmp(
            transformed_radius(family.envelope(b), f, k), floor_radius
        ) < 0:
            # the envelope bounds every later radius, so nothing at or above
            # the scale floor remains
            stopped = "scale floor reached"
            break
        r_b = family.block_radius(b)
        if r_b <= 0:
            continue
        rho = transformed_radius(r_b, f, k)
        rho_lo, rho_hi = xr_bounds(rho, 64)
        w = min(r_hi - rho_lo, r_hi / 2 + rho_hi)
        if w < 0:
            continue
        blocks_scanned += 1
        window = [(c - w, c + w) for c in region.center]
        for idx, ball in family.iter_block_window(b, window):
            if idx < start:
                continue
            if idx > params.index_budget:
                stopped = "index budget hit"
                break
            cand_seen += 1
            tball = Ball(ball.center, rho)
            if not contains_ball(region, tball):
                continue
            if not balls_intersect(tball, half):
                continue
            if any(not balls_disjoint(tball, kept) for _, _, kept in selected):
                continue
            selected.append((idx, ball, tball))
            acc.add(ball_measure(tball))
            if acc.cmp_parts(target) >= 0:
                reached = True
                break
        if reached or stopped:
            break

    if not reached:
        got = acc.value()
        raise BudgetExhausted(
            "capture target not reached: "
            f"{stopped or 'family exhausted'} "
            f"with {len(selected)} balls"
            + (f", captured {got}" if got is not None else "")
        )

    # truncate: keep the shortest index prefix whose complement-tail is
    # below kappa*m(region); scanning suffixes from the end finds the last
    # position where the tail still clears the floor.
    tail = _XSum()
    cut = None
    for t in range(len(selected) - 1, -1, -1):
        tail.add(ball_measure(selected[t][2]))
        if tail.cmp_parts(floor_parts) >= 0:
            cut = t
            break
    if cut is None:
        raise SelectionError("gathered capture lost below the floor during truncation")
    kept = selected[: cut + 1]
    truncated_at = kept[-1][0] + 1

    check = _XSum()
    for _, _, t in kept:
        check.add(ball_measure(t))
    if check.cmp_parts(floor_parts) < 0:
        raise SelectionError("kept selection fell below kappa * m(region)")

    return Selection(
        start=start,
        indices=[i for i, _, _ in kept],
        balls=[b for _, b, _ in kept],
        regions=[t for _, _, t in kept],
        truncated_at=truncated_at,
        blocks_scanned=blocks_scanned,
        candidates_seen=cand_seen,
    )


# ---------------------------------------------------------------------------
# free region and lattice packing (line case)


def _merge_rational(holes: list[tuple[Fraction, Fraction]]) -> list[tuple[Fraction, Fraction]]:
    holes = sorted(h for h in holes if h[0] < h[1])
    out: list[tuple[Fraction, Fraction]] = []
    for lo, hi in holes:
        if out and lo <= out[-1][1]:
            if hi > out[-1][1]:
                out[-1] = (out[-1][0], hi)
        else:
            out.append((lo, hi))
    return out


def _floor_sum(x: XR, off: Fraction, strict: bool) -> int:
    """Largest integer j with j < x + off (strict) or j <= x + off.

    Terminates for irrational x because x + off is then never an integer.
    """
    if xr_is_rational(x):
        v = Fraction(x) + off
        j = v.numerator // v.denominator
        if strict and j == v:
            j -= 1
        return j
    bits = 32
    while True:
        lo, hi = xr_bounds(x, bits)
        flo = (lo + off).__floor__()
        fhi = (hi + off).__floor__()
        if flo == fhi:
            return flo
        bits *= 2
        if bits > 4096:
            raise TransferenceError("lattice endpoint floor undecided")


def _ceil_sum(x: XR, off: Fraction, strict: bool) -> int:
    """Smallest integer j with j > x + off (strict) or j >= x + off."""
    return -_floor_sum(xr_mul_q(x, Fraction(-1)), -off, strict)


@dataclass
class Packing:
    """Lattice packing of the free region inside half a ball.

    Candidate centres sit on the grid (d_min/2)Z restricted to the free
    region; greedy left-to-right keeps every centre at least 2*d_min past
    the previous keep, which on an equal-radius family in lattice order is
    exactly the 5r-style greedy disjoint selection.  Runs store (first
    lattice index, count) per component so the kept set replays lazily.
    """

    d_min: Fraction
    h: Fraction
    components: list[tuple[XR, XR]]
    runs: list[tuple[int, int]]
    kept_count: int
    free_parts: list[tuple[Fraction, XR]]
    target: list[tuple[Fraction, XR]]

    def centers(self) -> Iterator[Fraction]:
        """Kept centres, middle of the sequence first, alternating outward.

        The ends of each free run abut a just-removed ball or the region
        boundary, where family balls that fit a sub-ball are scarcest, so
        consumers probing centres one by one should see central ones first.
        """
        total = self.kept_count
        if total == 0:
            return
        starts = [0]
        for _, n in self.runs:
            starts.append(starts[-1] + n)

        def at(t: int) -> Fraction:
            i = bisect_right(starts, t) - 1
            return (self.runs[i][0] + 5 * (t - starts[i])) * self.h

        mid = total // 2
        yield at(mid)
        for d in range(1, total):
            if mid + d < total:
                yield at(mid + d)
            if mid - d >= 0:
                yield at(mid - d)

    def kept_measure(self) -> Fraction:
        return self.kept_count * 2 * self.d_min


def free_and_pack(
    region: Ball,
    spent: Sequence[Ball],
    d_min: Fraction,
    params: ConstructionParams,
) -> Packing:
    """Remove the 4-fold enlargements of `spent` from half the region, check
    the remainder keeps at least half of the half-region's measure, then
    pack it with d_min-balls on the d_min/2 grid and check the packed
    measure against c1/(2*c2*5^k) of the half region.

    Works in coordinates centred on the region so that every interval
    endpoint stays a single exact value even when the region radius is a
    radical; the rational centre only re-enters in the lattice index
    arithmetic.
    """
    if region.k != 1:
        raise TransferenceError("free-region packing is implemented for the line (k=1)")
    d_min = Fraction(d_min)
    if d_min <= 0:
        raise TransferenceError("d_min must be positive")
    # sub-balls must fit: d_min <= r/2 keeps B(x, d_min) inside the region
    if xr_sign([(Fraction(1), region.radius), (Fraction(-2), d_min)]) < 0:
        raise PackingDeficit("sub-ball radius exceeds half the region radius")
    c = region.center[0]
    r = region.radius
    lo: XR = xr_mul_q(r, Fraction(-1, 2))  # u-coordinate: u = x - c
    hi: XR = xr_mul_q(r, Fraction(1, 2))

    holes = _merge_rational(
        [
            (b.center[0] - 4 * b.rational_radius() - c, b.center[0] + 4 * b.rational_radius() - c)
            for b in spent
        ]
    )

    comps: list[tuple[XR, bool, XR, bool]] = []  # (a, strict_a, b, strict_b)
    cur: XR = lo
    cur_strict = False
    for hlo, hhi in holes:
        if xr_cmp(Fraction(hhi), cur) <= 0:
            continue
        if xr_cmp(Fraction(hlo), hi) >= 0:
            break
        if xr_cmp(Fraction(hlo), cur) > 0:
            comps.append((cur, cur_strict, Fraction(hlo), True))
        if xr_cmp(Fraction(hhi), cur) > 0:
            cur = Fraction(hhi)
            cur_strict = True
    if xr_cmp(cur, hi) < 0:
        comps.append((cur, cur_strict, hi, False))

    free_parts: list[tuple[Fraction, XR]] = []
    for a, _, b, _ in comps:
        free_parts.append((Fraction(1), b))
        free_parts.append((Fraction(-1), a))
    # free measure >= half of m(half region); for k=1, m(half) = r
    if _parts_cmp(free_parts, [(Fraction(1, 2), r)]) < 0:
        raise FreeRegionDeficit("free region below half of the half-region measure")

    # lattice x = j*h, i.e. u = j*h - c: j ranges over [(a+c)/h, (b+c)/h]
    h = d_min / 2
    runs: list[tuple[int, int]] = []
    kept = 0
    j_prev: int | None = None
    for a, a_strict, b, b_strict in comps:
        j_lo = _ceil_sum(xr_mul_q(a, 1 / h), c / h, a_strict)
        j_hi = _floor_sum(xr_mul_q(b, 1 / h), c / h, b_strict)
        if j_prev is not None:
            j_lo = max(j_lo, j_prev + 5)
        if j_lo > j_hi:
            continue
        n = (j_hi - j_lo) // 5 + 1
        runs.append((j_lo, n))
        kept += n
        j_prev = j_lo + 5 * (n - 1)

    target = [
        (
            params.c1 / (2 * params.c2 * Fraction(5) ** region.k),
            ball_measure(scale_ball(region, Fraction(1, 2))),
        )
    ]
    if _parts_cmp([(Fraction(1), Fraction(kept * 2) * d_min)], target) < 0:
        raise PackingDeficit(f"packed measure {kept} * 2*d_min below the packing target")

    return Packing(
        d_min=d_min,
        h=h,
        components=[(a, b) for a, _, b, _ in comps],
        runs=runs,
        kept_count=kept,
        free_parts=free_parts,
        target=target,
    )


# ---------------------------------------------------------------------------
# tree construction


@dataclass
class Node:
    nid: int
    level: int  # 1 = root
    parent: int | None
    sublevel: int  # 0 for the root, else position of its sub-level
    index: int | None  # family index (None for the root)
    ball: Ball  # the family ball (root: the seed region itself)
    region: Ball  # its f-transform; children are selected inside this
    vf: XR  # f(radius of ball) = V^k(region)
    children: list[int] = field(default_factory=list)
    mu_lo: Fraction | None = None
    mu_hi: Fraction | None = None

    @property
    def mu_point(self) -> Fraction | None:
        if self.mu_lo is not None and self.mu_lo == self.mu_hi:
            return self.mu_lo
        return None


@dataclass
class LocalRecord:
    """Bookkeeping for one local level (all children of one node)."""

    node: int
    sublevels: int  # sub-levels actually built
    sublevels_prescribed: int
    scale_stopped: bool  # demo build ended early: family ran out at the packing scale
    start: int
    shrunken_starts: list[int]
    truncations: list[int]
    d_mins: list[Fraction]
    bundles_used: list[int]
    bundles_skipped: list[int]
    packing_kept: list[int]
    sublevel_sizes: list[int]


@dataclass
class CantorTree:
    f: DimensionFunction
    params: ConstructionParams
    family_manifest: dict
    nodes: list[Node]
    records: list[LocalRecord]
    flags: dict[str, bool] = field(default_factory=dict)
    flag_failures: dict[str, int] = field(default_factory=dict)
    mu_exact: bool = True
    mu_width: Fraction = Fraction(0)

    def children_of(self, node: Node) -> list[Node]:
        return [self.nodes[c] for c in node.children]

    def level_nodes(self, n: int) -> list[Node]:
        return [x for x in self.nodes if x.level == n]

    def leaves(self) -> list[Node]:
        return [x for x in self.nodes if not x.children]

    def internal(self) -> list[Node]:
        return [x for x in self.nodes if x.children]

    def r_o(self) -> Fraction | None:
        """Smallest original radius at level 2; sampled balls stay below it."""
        lvl2 = self.level_nodes(2)
        if not lvl2:
            return None
        return min(n.ball.rational_radius() for n in lvl2)


def _attach(
    nodes: list[Node],
    parent: Node,
    sel: Selection,
    sublevel: int,
    f: DimensionFunction,
) -> list[int]:
    out = []
    for idx, ball, region in zip(sel.indices, sel.balls, sel.regions):
        nid = len(nodes)
        nodes.append(
            Node(
                nid=nid,
                level=parent.level + 1,
                parent=parent.nid,
                sublevel=sublevel,
                index=idx,
                ball=ball,
                region=region,
                vf=f_volume(ball, f),
            )
        )
        parent.children.append(nid)
        out.append(nid)
    return out


def _min_vf(kids: Sequence[Node]) -> XR:
    best = kids[0].vf
    for kid in kids[1:]:
        if xr_cmp(kid.vf, best) < 0:
            best = kid.vf
    return best


def _build_local_level(
    nodes: list[Node],
    records: list[LocalRecord],
    family: BallFamily,
    f: DimensionFunction,
    params: ConstructionParams,
    nid: int,
    root_vf: XR,
) -> None:
    parent = nodes[nid]
    region = parent.region
    is_root = parent.level == 1
    count = prescribed_sublevels(parent.ball, f, params, is_root)
    eps = epsilon_for(params, root_vf, is_root)
    start = selection_start(family, region, f, params, eps)

    sel = select_capture(family, region, f, params, start)
    _attach(nodes, parent, sel, 1, f)

    shrunken: list[int] = []
    truncations = [sel.truncated_at]
    d_mins: list[Fraction] = []
    bundles: list[int] = []
    skipped: list[int] = []
    packing_kept: list[int] = []
    sizes = [len(sel.indices)]
    built = 1
    scale_stopped = False
    demo = params.mode == "demo"

    for sub in range(2, count + 1):
        kids = [nodes[c] for c in parent.children]
        d_min = min(k.ball.rational_radius() for k in kids)
        floor = d_min * _BUNDLE_FLOOR

        def small_enough(e: Fraction, _d=d_min) -> bool:
            if e <= 0:
                return True
            return xr_cmp(transformed_radius(e, f, params.k), _d) <= 0

        fit_block = _first_block(family, small_enough)
        if fit_block is None or family.index_start(fit_block) > params.index_budget:
            if demo:
                scale_stopped = True
                break
            raise PackingDeficit("no family ball fits the packing scale within the budget")
        pack = free_and_pack(region, [k.ball for k in kids], d_min, params)
        try:
            start2 = shrunken_start(family, f, _min_vf(kids), start, params)
        except BudgetExhausted:
            if demo:
                scale_stopped = True
                break
            raise

        quota = [(params.c3, ball_volume(region))]
        got = _XSum()
        used = 0
        skips = 0
        new_ids: list[int] = []
        done = False
        nodes_before = len(nodes)
        children_before = len(parent.children)
        truncs_before = len(truncations)
        for x in pack.centers():
            sub_ball = Ball((x,), d_min)
            # safety net: packed balls must sit in the region, clear of the
            # 3-fold enlargements of everything already selected here
            if not contains_ball(region, sub_ball):
                raise PackingDeficit("packed sub-ball escaped the region")
            for kid in kids:
                if not balls_disjoint(sub_ball, scale_ball(kid.ball, 3)):
                    raise PackingDeficit("packed sub-ball meets a selected 3-fold ball")
            try:
                bsel = select_capture(family, sub_ball, f, params, start2, floor_radius=floor)
            except BudgetExhausted:
                # a truncated family can leave a packed centre barren (near a
                # low-height rational no admissible ball fits); the packing
                # only has to supply enough centres, so move to the next one
                skips += 1
                continue
            ids = _attach(nodes, parent, bsel, sub, f)
            new_ids.extend(ids)
            truncations.append(bsel.truncated_at)
            for c in ids:
                got.add(nodes[c].vf)
            used += 1
            if got.cmp_parts(quota) >= 0:
                done = True
                break
        if not done:
            if demo:
                # every centre was barren at this scale (or the partial haul
                # missed the quota): unwind the partial sub-level and close
                # the local level here
                del nodes[nodes_before:]
                del parent.children[children_before:]
                del truncations[truncs_before:]
                scale_stopped = True
                break
            raise PackingDeficit(
                "packed sub-balls exhausted before the sub-level volume quota "
                f"({used} bundles, {skips} barren centres)"
            )

        shrunken.append(start2)
        d_mins.append(d_min)
        bundles.append(used)
        skipped.append(skips)
        packing_kept.append(pack.kept_count)
        sizes.append(len(new_ids))
        built = sub

    records.append(
        LocalRecord(
            node=nid,
            sublevels=built,
            sublevels_prescribed=count,
            scale_stopped=scale_stopped,
            start=start,
            shrunken_starts=shrunken,
            truncations=truncations,
            d_mins=d_mins,
            bundles_used=bundles,
            bundles_skipped=skipped,
            packing_kept=packing_kept,
            sublevel_sizes=sizes,
        )
    )


def build_cantor(
    family: BallFamily,
    f: DimensionFunction,
    params: ConstructionParams,
    root: Ball | None = None,
) -> CantorTree:
    """Build, measure and verify the full nested construction."""
    k = params.k
    if family.k != k:
        raise TransferenceError("family dimension does not match the parameters")
    if not f.is_power:
        raise TransferenceError("construction needs a pure power gauge (log factors have no exact transform)")
    behaviour = f.monotone_volume_ratio(k)
    if behaviour != "to_infinity":
        raise ComparableMeasures(
            f"r^-k f(r) stays {behaviour.replace('_', ' ')} as r -> 0; "
            "f-volume is comparable to ambient volume, construction skipped"
        )
    if root is None:
        root = Ball((Fraction(1, 2),) * k, Fraction(1, 2))
    root.rational_radius()  # the seed must be exactly representable

    root_vf = f_volume(root, f)
    nodes = [Node(0, 1, None, 0, None, root, root, root_vf)]
    records: list[LocalRecord] = []
    frontier = [0]
    for _level in range(2, params.depth + 1):
        nxt: list[int] = []
        for nid in frontier:
            _build_local_level(nodes, records, family, f, params, nid, root_vf)
            nxt.extend(nodes[nid].children)
        frontier = nxt

    tree = CantorTree(
        f=f,
        params=params,
        family_manifest=family.manifest(),
        nodes=nodes,
        records=records,
    )
    assign_measure(tree)
    verify_properties(tree)
    verify_node_bounds(tree)
    return tree


# ---------------------------------------------------------------------------
# the measure


def assign_measure(tree: CantorTree) -> None:
    """Split mass top-down proportionally to f-volumes.

    Exact rationals whenever every child f-volume is rational; otherwise
    certified enclosures at params.mu_bits with the width recorded.
    """
    nodes = tree.nodes
    nodes[0].mu_lo = nodes[0].mu_hi = Fraction(1)
    exact = True
    conserved = True
    for node in nodes:
        if not node.children:
            continue
        kids = [nodes[c] for c in node.children]
        if all(xr_is_rational(k.vf) for k in kids):
            denom = sum((Fraction(k.vf) for k in kids), Fraction(0))
            for k in kids:
                w = Fraction(k.vf) / denom
                k.mu_lo = node.mu_lo * w
                k.mu_hi = node.mu_hi * w
        else:
            exact = False
            bnds = [xr_bounds(k.vf, tree.params.mu_bits) for k in kids]
            dlo = sum(b[0] for b in bnds)
            dhi = sum(b[1] for b in bnds)
            if dlo <= 0:
                raise TransferenceError("f-volume enclosure not positive; raise mu_bits")
            for k, (blo, bhi) in zip(kids, bnds):
                k.mu_lo = node.mu_lo * blo / dhi
                k.mu_hi = node.mu_hi * bhi / dlo
        slo = sum(k.mu_lo for k in kids)
        shi = sum(k.mu_hi for k in kids)
        if shi < node.mu_lo or slo > node.mu_hi:
            conserved = False
    leaves = tree.leaves()
    lsum_lo = sum(l.mu_lo for l in leaves)
    lsum_hi = sum(l.mu_hi for l in leaves)
    if not (lsum_lo <= 1 <= lsum_hi):
        conserved = False
    tree.mu_exact = exact
    tree.mu_width = max((n.mu_hi - n.mu_lo for n in nodes), default=Fraction(0))
    tree.flags["conservation"] = conserved
    tree.flag_failures["conservation"] = 0 if conserved else 1


# ---------------------------------------------------------------------------
# exact verification passes


def _pairwise_disjoint(balls: Sequence[Ball]) -> bool:
    if len(balls) < 2:
        return True
    if balls[0].k == 1:
        # intervals sorted by centre: adjacent disjointness is enough
        srt = sorted(balls, key=lambda b: b.center[0])
        return all(balls_disjoint(a, b) for a, b in zip(srt, srt[1:]))
    return all(
        balls_disjoint(balls[i], balls[j])
        for i in range(len(balls))
        for j in range(i + 1, len(balls))
    )


def verify_properties(tree: CantorTree) -> dict[str, bool]:
    """Recompute the structural flags of every local level from scratch."""
    p = tree.params
    names = ("separation", "nesting", "capture", "halving", "sublevel_count")
    ok = {n: True for n in names}
    fails = {n: 0 for n in names}

    for rec in tree.records:
        parent = tree.nodes[rec.node]
        kids = tree.children_of(parent)
        region = parent.region
        half = scale_ball(region, Fraction(1, 2))
        groups: dict[int, list[Node]] = {}
        for kid in kids:
            groups.setdefault(kid.sublevel, []).append(kid)

        triples = [scale_ball(kid.ball, 3) for kid in kids]
        sep = all(contains_ball(kid.region, t) for kid, t in zip(kids, triples))
        sep = sep and _pairwise_disjoint(triples)
        sep = sep and all(contains_ball(region, kid.region) for kid in kids)
        if not sep:
            ok["separation"] = False
            fails["separation"] += 1

        nest = all(balls_intersect(kid.region, half) for kid in kids)
        for sub in groups.values():
            nest = nest and _pairwise_disjoint([g.region for g in sub])
        if not nest:
            ok["nesting"] = False
            fails["nesting"] += 1

        vk = ball_volume(region)
        cap = True
        for sub in groups.values():
            acc = _XSum()
            for g in sub:
                acc.add(g.vf)
            cap = cap and acc.cmp_parts([(p.c3, vk)]) >= 0
        if not cap:
            ok["capture"] = False
            fails["capture"] += 1

        halv = True
        for lvl in range(1, rec.sublevels):
            prev = groups.get(lvl, [])
            nxt = groups.get(lvl + 1, [])
            if not prev or not nxt:
                halv = False
                break
            mn = _min_vf(prev)
            mx = nxt[0].vf
            for g in nxt[1:]:
                if xr_cmp(g.vf, mx) > 0:
                    mx = g.vf
            halv = halv and xr_sign([(Fraction(1, 2), mn), (Fraction(-1), mx)]) >= 0
        if not halv:
            ok["halving"] = False
            fails["halving"] += 1

        prescribed = prescribed_sublevels(parent.ball, tree.f, p, parent.level == 1)
        sc = rec.sublevels_prescribed == prescribed
        if rec.scale_stopped:
            # an early close is only legitimate in demo mode, and only as a
            # genuine shortfall against the prescription
            sc = sc and p.mode == "demo" and 1 <= rec.sublevels < prescribed
        else:
            sc = sc and rec.sublevels == prescribed
        sc = sc and sorted(groups) == list(range(1, rec.sublevels + 1))
        sc = sc and all(len(groups[l]) >= 1 for l in groups)
        if not sc:
            ok["sublevel_count"] = False
            fails["sublevel_count"] += 1

    tree.flags.update(ok)
    tree.flag_failures.update(fails)
    return ok


def verify_node_bounds(tree: CantorTree) -> dict[str, bool]:
    """Per-node measure bound mu(L) <= V^f(L)/eta, and the branching volume
    surplus that propagates it one level down."""
    eta = tree.params.eta
    bound_ok = True
    bound_fail = 0
    for node in tree.nodes:
        good = xr_sign([(1 / eta, node.vf), (Fraction(-1), node.mu_hi)]) >= 0
        if not good:
            bound_ok = False
            bound_fail += 1

    branch_ok = True
    branch_fail = 0
    for node in tree.internal():
        acc = _XSum()
        for kid in tree.children_of(node):
            acc.add(kid.vf)
        if node.level == 1:
            target = [(Fraction(1), eta)]
        else:
            target = [(Fraction(1), node.vf)]
        if acc.cmp_parts(target) < 0:
            branch_ok = False
            branch_fail += 1

    tree.flags["node_bound"] = bound_ok
    tree.flags["branch_volume"] = branch_ok
    tree.flag_failures["node_bound"] = bound_fail
    tree.flag_failures["branch_volume"] = branch_fail
    return {"node_bound": bound_ok, "branch_volume": branch_ok}


# ---------------------------------------------------------------------------
# sampled ball bound


@dataclass
class SampledBound:
    """Empirical check of mu(A) * eta <= C * V^f(A) over random small balls.

    The max observed ratio eta*mu(A)/V^f(A) is the sampled stand-in for the
    mass-distribution constant; comparisons and the maximum are exact, only
    the reported floats are approximate.
    """

    trials: int
    seed: int
    r_o: Fraction
    zero_mass: int
    max_ratio_float: float
    max_ratio_lo: Fraction
    max_ratio_hi: Fraction
    mu_plus_at_max: Fraction
    radius_at_max: Fraction
    center_at_max: Fraction
    branch_level_histogram: dict[int, int]
    case_within_sublevel: int
    case_across_sublevels: int
    case_mixed_parents: int
    single_chain: int
    mass_constant: Fraction
    within_constant: bool


def verify_ball_bound(tree: CantorTree, trials: int = 10000, seed: int = 0) -> SampledBound:
    """Sample small balls meeting the limsup-set approximation and measure
    the worst ratio eta*mu(A)/V^f(A) against the mass constant.

    Each sample picks a leaf, a radius below r_o spread over dyadic scales,
    and a centre guaranteed to touch the leaf region.  mu(A) is the exact
    sum of (upper) leaf masses over leaves meeting A; the running maximum
    of the ratio is tracked by exact cross-multiplied comparisons.  The
    branching replay finds the first level where A straddles two selected
    balls and classifies whether they share a sub-level.
    """
    if tree.params.k != 1:
        raise TransferenceError("sampled ball bound is implemented for k=1")
    if tree.params.depth < 2:
        raise TransferenceError("sampling needs at least two levels")
    if trials < 1:
        raise TransferenceError("trials >= 1 required")
    eta = tree.params.eta
    f = tree.f
    r_o = tree.r_o()

    leaves = sorted(tree.leaves(), key=lambda n: n.region.center[0])
    centers = [n.region.center[0] for n in leaves]
    leaf_bounds = [xr_bounds(n.region.radius, 64) for n in leaves]
    rmax_hi = max(b[1] for b in leaf_bounds)
    rmin_lo = min(b[0] for b in leaf_bounds)
    if rmin_lo <= 0:
        raise TransferenceError("leaf radius enclosure not positive")

    levels: dict[int, tuple[list[Node], list[Fraction], Fraction]] = {}
    for n in range(2, tree.params.depth + 1):
        ns = sorted(tree.level_nodes(n), key=lambda x: x.region.center[0])
        cs = [x.region.center[0] for x in ns]
        rhx = max(xr_bounds(x.region.radius, 64)[1] for x in ns)
        levels[n] = (ns, cs, rhx)

    spread = (r_o / rmin_lo).__floor__().bit_length() + 3
    spread = max(8, min(spread, 64))

    rng = random.Random(seed)
    best: tuple[Fraction, XR, Fraction, Fraction] | None = None
    zero_mass = 0
    hist: dict[int, int] = {}
    case_within = 0
    case_across = 0
    mixed = 0
    chains = 0

    for _ in range(trials):
        li = rng.randrange(len(leaves))
        leaf = leaves[li]
        j = rng.randrange(spread)
        mant = Fraction(rng.randrange(1 << 20, 1 << 21), 1 << 21)  # [1/2, 1)
        radius = r_o * mant / (1 << j)  # strictly below r_o
        t = Fraction(rng.randint(-(1 << 20), 1 << 20), 1 << 20)  # [-1, 1]
        reach = leaf_bounds[li][0] + radius  # <= true leaf radius + radius
        center = leaf.region.center[0] + t * reach
        ball = Ball((center,), radius)

        w_lo = center - radius - rmax_hi
        w_hi = center + radius + rmax_hi
        i0 = bisect_left(centers, w_lo)
        i1 = bisect_right(centers, w_hi)
        mu_plus = Fraction(0)
        for other in leaves[i0:i1]:
            if balls_intersect(ball, other.region):
                mu_plus += other.mu_hi
        if mu_plus == 0:
            zero_mass += 1
        else:
            vf_ball = xr_pow(radius, f.s)
            if best is None or xr_sign([(mu_plus, best[1]), (-best[0], vf_ball)]) > 0:
                best = (mu_plus, vf_ball, radius, center)

        found = False
        for n in range(2, tree.params.depth + 1):
            ns, cs, rhx = levels[n]
            a0 = bisect_left(cs, center - radius - rhx)
            a1 = bisect_right(cs, center + radius + rhx)
            hits = [x for x in ns[a0:a1] if balls_intersect(ball, x.region)]
            if len(hits) >= 2:
                hist[n] = hist.get(n, 0) + 1
                parents = {x.parent for x in hits}
                if len(parents) > 1:
                    mixed += 1
                elif len({x.sublevel for x in hits}) == 1:
                    case_within += 1
                else:
                    case_across += 1
                found = True
                break
        if not found:
            chains += 1

    if best is None:
        raise TransferenceError("no sampled ball carried mass")
    mu_b, vf_b, rad_b, cen_b = best
    vlo, vhi = xr_bounds(vf_b, 160)
    ratio_lo = eta * mu_b / vhi
    ratio_hi = eta * mu_b / vlo
    mass_c = tree.params.mass_constant
    within = xr_sign([(mass_c, vf_b), (-eta * mu_b, Fraction(1))]) >= 0

    return SampledBound(
        trials=trials,
        seed=seed,
        r_o=r_o,
        zero_mass=zero_mass,
        max_ratio_float=float(ratio_hi),
        max_ratio_lo=ratio_lo,
        max_ratio_hi=ratio_hi,
        mu_plus_at_max=mu_b,
        radius_at_max=rad_b,
        center_at_max=cen_b,
        branch_level_histogram=dict(sorted(hist.items())),
        case_within_sublevel=case_within,
        case_across_sublevels=case_across,
        case_mixed_parents=mixed,
        single_chain=chains,
        mass_constant=mass_c,
        within_constant=within,
    )


# ---------------------------------------------------------------------------
# certificate


_CORE_FLAGS = ("separation", "nesting", "capture", "halving", "sublevel_count", "conservation")
_MEASURE_FLAGS = _CORE_FLAGS + ("node_bound", "branch_volume")


@dataclass
class Certificate:
    """Outcome summary of one construction run.

    claim levels: "measure-certified" means every exact flag including the
    per-node measure bounds holds, so eta/max-ratio is a genuine lower-bound
    pipeline; "tree-only" means the structure is exact but the measure
    bounds failed (the demo cap does this by design); "failed" marks any
    structural breakage.
    """

    mode: str
    k: int
    depth: int
    eta: Fraction
    f_exponent: Fraction
    kappa: Fraction
    c3: Fraction
    epsilon_base: Fraction
    mass_constant: Fraction
    family: dict
    node_count: int
    leaf_count: int
    r_o: Fraction | None
    flags: dict[str, bool]
    flag_failures: dict[str, int]
    mu_exact: bool
    mu_width: Fraction
    claim: str
    sampled: SampledBound | None = None


def make_certificate(tree: CantorTree, sampled: SampledBound | None = None) -> Certificate:
    flags = dict(tree.flags)
    if all(flags.get(x, False) for x in _MEASURE_FLAGS):
        claim = "measure-certified"
    elif all(flags.get(x, False) for x in _CORE_FLAGS):
        claim = "tree-only"
    else:
        claim = "failed"
    return Certificate(
        mode=tree.params.mode,
        k=tree.params.k,
        depth=tree.params.depth,
        eta=tree.params.eta,
        f_exponent=tree.f.s,
        kappa=tree.params.kappa,
        c3=tree.params.c3,
        epsilon_base=tree.params.epsilon_base,
        mass_constant=tree.params.mass_constant,
        family=dict(tree.family_manifest),
        node_count=len(tree.nodes),
        leaf_count=len(tree.leaves()),
        r_o=tree.r_o(),
        flags=flags,
        flag_failures=dict(tree.flag_failures),
        mu_exact=tree.mu_exact,
        mu_width=tree.mu_width,
        claim=claim,
        sampled=sampled,
    )

