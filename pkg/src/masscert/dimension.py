"""Pre-measure covers, certified lower bounds, and box-dimension slopes.

The upper side sums f-volumes over explicit finite covers with directed
rounding (never below the true value).  The lower side divides the target
mass by the sampled ball-bound constant of a construction certificate.  Box
counting reproduces the approximation exponent on the line by counting
dyadic boxes hit by each fresh shell of denominators at a matched
resolution; all box indices are computed in exact integer arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import log
from typing import Sequence

import numpy as np

from . import _kernels
from ._kernels import pykernels
from .criteria import PartialSum
from .diophantine import BallFamily
from .exactpow import xr_bounds, xr_is_rational, xr_pow
from .geometry import DimensionFunction
from .transference import _CORE_FLAGS, Certificate, CantorTree


class DimensionError(ValueError):
    pass


# ---------------------------------------------------------------------------
# pre-measure upper sums


def premeasure_upper(
    family: BallFamily,
    f: DimensionFunction,
    rho: Fraction,
    tail_G: int,
    bits: int = 128,
) -> PartialSum:
    """Sum of f-volumes over the family tail {index >= tail_G}.

    The tail is a cover of the corresponding truncation of the limsup set,
    so the sum upper-bounds its f-pre-measure at scale rho.  Exact when
    every term is rational; otherwise rounded up at `bits` precision.
    """
    rho = Fraction(rho)
    if rho <= 0:
        raise DimensionError("rho must be positive")
    if not 1 <= tail_G <= family.total():
        raise DimensionError("tail start outside the family index range")
    b0 = family.block_of_index(tail_G)
    if family.envelope(b0) > rho:
        raise DimensionError("tail radii exceed the scale rho")

    total = Fraction(0)
    exact = True
    keys = family.block_keys()
    for b in keys[keys.index(b0):]:
        size = family.block_size(b)
        start = family.index_start(b)
        cnt = size - max(0, tail_G - start)
        if cnt <= 0:
            continue
        r = family.block_radius(b)
        if r <= 0:
            continue
        if f.is_power:
            v = f.value_xr(r)
            if xr_is_rational(v):
                total += cnt * Fraction(v)
            else:
                total += cnt * xr_bounds(v, bits)[1]
                exact = False
        else:
            total += cnt * f.value_bounds(r, bits)[1]
            exact = False
    return PartialSum(total, exact)


def leaf_cover_upper(tree: CantorTree, bits: int = 128) -> tuple[PartialSum, Fraction]:
    """f-volume of the leaf-region cover of the constructed set, with the
    cover scale (largest leaf radius, rounded up).

    Leaf regions are transforms of family balls, so their radius is
    r^(s/k) for a rational r and the f-volume is the exact monomial
    r^(s*s/k); irrational terms are rounded up.
    """
    f = tree.f
    k = tree.params.k
    total = Fraction(0)
    exact = True
    rho_hi = Fraction(0)
    for leaf in tree.leaves():
        r = leaf.ball.rational_radius()
        v = xr_pow(r, f.s * f.s / k)
        if xr_is_rational(v):
            total += Fraction(v)
        else:
            total += xr_bounds(v, bits)[1]
            exact = False
        rho_hi = max(rho_hi, xr_bounds(leaf.region.radius, bits)[1])
    return PartialSum(total, exact), rho_hi


def sandwich_check(lower: Fraction, upper: PartialSum) -> bool:
    """Exact lower <= upper comparison for matched runs."""
    return Fraction(lower) <= upper.value


# ---------------------------------------------------------------------------
# mass-distribution lower bound


@dataclass(frozen=True)
class MdpBound:
    """Lower bound eta / C_emp for the f-measure of the constructed set.

    `value` uses the certified upper enclosure of the sampled maximum
    ratio, so it never overstates the bound.  The caveat spells out that
    the constant is a sampled maximum, not a proven supremum.
    """

    value: Fraction
    eta: Fraction
    c_emp_upper: Fraction
    claim: str
    caveat: str


def mdp_lower_bound(cert: Certificate) -> MdpBound:
    if cert.sampled is None:
        raise DimensionError("certificate carries no sampled ball bound")
    if not all(cert.flags.get(x, False) for x in _CORE_FLAGS):
        failed = [x for x in _CORE_FLAGS if not cert.flags.get(x, False)]
        raise DimensionError(f"certificate failed structural checks: {', '.join(failed)}")
    s = cert.sampled
    if s.max_ratio_hi <= 0:
        raise DimensionError("sampled ratio enclosure not positive")
    value = cert.eta / s.max_ratio_hi
    notes = [f"constant sampled from {s.trials} balls (seed {s.seed}), not a proven supremum"]
    if cert.claim == "tree-only":
        notes.append("demo constants: per-node measure bounds fail below the root, bound applies to the weighted tree only")
    elif cert.claim == "failed":
        raise DimensionError("certificate claim is 'failed'")
    if not cert.mu_exact:
        notes.append(f"masses are enclosures of width <= {float(cert.mu_width):.3e}")
    return MdpBound(
        value=value,
        eta=cert.eta,
        c_emp_upper=s.max_ratio_hi,
        claim=cert.claim,
        caveat="; ".join(notes),
    )


# ---------------------------------------------------------------------------
# box dimension on the line


@dataclass(frozen=True)
class BoxRow:
    q_lo: int
    q_hi: int
    resolution_bits: int  # boxes have side 2^-resolution_bits
    count: int


@dataclass(frozen=True)
class BoxReport:
    tau: int
    rows: tuple[BoxRow, ...]
    slope: float
    residual: float
    target: Fraction

    def csv_rows(self) -> list[tuple[int, str, int]]:
        return [(r.q_hi, f"2^-{r.resolution_bits}", r.count) for r in self.rows]


def _count_covered(lo: np.ndarray, hi: np.ndarray, m: int) -> int:
    """Number of integers in [0, 2^m) covered by the union of [lo_i, hi_i]."""
    cap = (1 << m) - 1
    lo = np.maximum(lo, 0)
    hi = np.minimum(hi, cap)
    keep = lo <= hi
    if not np.any(keep):
        return 0
    lo = lo[keep]
    hi = hi[keep]
    order = np.argsort(lo, kind="stable")
    lo = lo[order]
    hi = hi[order]
    run = np.maximum.accumulate(hi)
    new = np.empty(len(lo), dtype=bool)
    new[0] = True
    np.greater(lo[1:], run[:-1], out=new[1:])
    starts = np.flatnonzero(new)
    ends = np.append(starts[1:] - 1, len(lo) - 1)
    return int(np.sum(run[ends] - lo[starts] + 1))


def box_dim_estimate(tau: int, scales: Sequence[int], k: int = 1) -> BoxReport:
    """Box-counting slope for the tau-approximable set on [0, 1].

    Each scale Q counts the dyadic boxes hit by the balls of the fresh
    denominator shell (previous Q, Q] at side 2^-m with m = ceil((tau+1) *
    log2 Q), the scale of the smallest ball in the shell.  Counting the
    full union q <= Q instead is vacuous: the q = 1 balls alone cover the
    interval at every resolution.  Box index ranges are exact; the slope
    is least squares of log N against log(1/side).
    """
    if k != 1:
        raise DimensionError("box counting is implemented for k=1")
    if not isinstance(tau, int) or tau < 1:
        raise DimensionError("tau must be an integer >= 1")
    scales = [int(q) for q in scales]
    if len(scales) < 3:
        raise DimensionError("need at least 3 scales")
    if scales[0] < 2 or any(a >= b for a, b in zip(scales, scales[1:])):
        raise DimensionError("scales must be increasing and at least 2")
    rexp = tau + 1

    rows: list[BoxRow] = []
    prev = max(1, scales[0] // 2)
    for q_hi in scales:
        m = (q_hi**rexp - 1).bit_length()
        if m > 62:
            raise DimensionError("resolution exceeds 2^62 boxes; lower the scales")
        shell = int(np.sum(np.asarray(_kernels.totient_sieve(q_hi), dtype=np.int64)[prev + 1 :]))
        if shell > 1 << 26:
            raise DimensionError("shell holds more than 2^26 balls; lower the scales")
        try:
            lo, hi = _kernels.dyadic_box_ranges(prev, q_hi, rexp, m)
        except OverflowError:
            lo, hi = pykernels.dyadic_box_ranges(prev, q_hi, rexp, m)
        count = _count_covered(lo, hi, m)
        if count <= 0:
            raise DimensionError(f"empty shell ({prev + 1}..{q_hi}); widen the scales")
        rows.append(BoxRow(prev + 1, q_hi, m, count))
        prev = q_hi

    xs = np.array([r.resolution_bits * log(2.0) for r in rows])
    ys = np.array([log(r.count) for r in rows])
    (slope, _intercept), res = np.polyfit(xs, ys, 1, full=True)[:2]
    residual = float(res[0]) if len(res) else 0.0
    return BoxReport(
        tau=tau,
        rows=tuple(rows),
        slope=float(slope),
        residual=residual,
        target=Fraction(2, 1 + tau),
    )


def jb_dimension(tau: int) -> Fraction:
    """The approximation-exponent dimension value 2/(1+tau) on the line."""
    if tau < 1:
        raise DimensionError("tau >= 1 required")
    return Fraction(2, 1 + tau)
