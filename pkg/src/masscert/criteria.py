"""Partial sums of the divergence criteria, plus growth diagnostics.

Four series matter, two per coprimality regime:

    pairwise, Lebesgue:   sum (phi(n) psi(n) / n) ** k
    pairwise, Hausdorff:  sum f(psi(n)/n) * phi(n) ** k
    joint, Lebesgue:      sum psi(n) ** k
    joint, Hausdorff:     sum f(psi(n)/n) * n ** k

Sums are exact rationals whenever every term is rational; otherwise each
term is rounded DOWN at the requested precision so the reported value is
a certified lower bound.  No divergence verdicts are issued: finite
partial sums cannot witness divergence, so growth_report only fits
growth rates and leaves interpretation to the caller.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import _kernels
from .diophantine import ApproximatingFunction, DiophantineError
from .exactpow import qpow, pow_bounds
from .geometry import DimensionFunction


@dataclass(frozen=True)
class PartialSum:
    """value is the exact sum when exact=True, else a certified lower bound."""

    value: Fraction
    exact: bool

    def __str__(self) -> str:
        tag = "" if self.exact else " (lower bound)"
        return f"{self.value}{tag}"


def _phi_upto(n: int) -> list[int]:
    return [int(v) for v in _kernels.totient_sieve(n)]


def _f_term_down(f: DimensionFunction, x: Fraction, bits: int) -> tuple[Fraction, bool]:
    """f(x) exactly if rational, else rounded down to a certified bound."""
    if f.is_power:
        v = qpow(x, f.s)
        if v is not None:
            return v, True
        lo, _ = pow_bounds(x, f.s, bits)
        return lo, False
    lo, _ = f.value_bounds(x, bits)
    return lo, False


def sum_pairwise_lebesgue(psi: ApproximatingFunction, k: int, n_max: int) -> PartialSum:
    """sum_{n<=N} (phi(n) psi(n) / n)^k, exact."""
    if k < 1 or n_max < 1:
        raise DiophantineError("need k >= 1 and N >= 1")
    phi = _phi_upto(n_max)
    total = Fraction(0)
    for n in range(1, n_max + 1):
        total += (Fraction(phi[n]) * psi.value(n) / n) ** k
    return PartialSum(total, True)


def sum_pairwise_hausdorff(
    psi: ApproximatingFunction,
    f: DimensionFunction,
    k: int,
    n_max: int,
    bits: int = 128,
) -> PartialSum:
    """sum_{n<=N} f(psi(n)/n) phi(n)^k; exact when every term is rational."""
    if k < 1 or n_max < 1:
        raise DiophantineError("need k >= 1 and N >= 1")
    phi = _phi_upto(n_max)
    total = Fraction(0)
    exact = True
    for n in range(1, n_max + 1):
        term, ok = _f_term_down(f, psi.value(n) / n, bits)
        exact = exact and ok
        total += term * phi[n] ** k
    return PartialSum(total, exact)


def sum_joint_lebesgue(psi: ApproximatingFunction, k: int, n_max: int) -> PartialSum:
    """sum_{n<=N} psi(n)^k, exact."""
    if k < 1 or n_max < 1:
        raise DiophantineError("need k >= 1 and N >= 1")
    total = Fraction(0)
    for n in range(1, n_max + 1):
        total += psi.value(n) ** k
    return PartialSum(total, True)


def sum_joint_hausdorff(
    psi: ApproximatingFunction,
    f: DimensionFunction,
    k: int,
    n_max: int,
    bits: int = 128,
) -> PartialSum:
    """sum_{n<=N} f(psi(n)/n) n^k; exact when every term is rational."""
    if k < 1 or n_max < 1:
        raise DiophantineError("need k >= 1 and N >= 1")
    total = Fraction(0)
    exact = True
    for n in range(1, n_max + 1):
        term, ok = _f_term_down(f, psi.value(n) / n, bits)
        exact = exact and ok
        total += term * n**k
    return PartialSum(total, exact)


# ---------------------------------------------------------------------------
# growth diagnostics


@dataclass(frozen=True)
class GrowthReport:
    """Least-squares growth fits for a sequence of partial sums.

    slope_loglog: fit of log S(N) against log log N (harmonic-like sums
    grow with slope about 1 here).  slope_log: fit of log S(N) against
    log N (convergent sums flatten to slope about 0).  Residuals are the
    fit RMS.  Reporting only; floats are fine and no verdict is implied.
    """

    points: tuple[tuple[int, Fraction], ...]
    slope_loglog: float
    resid_loglog: float
    slope_log: float
    resid_log: float

    def rows(self) -> list[dict]:
        return [{"N": n, "sum": str(s)} for n, s in self.points]


def growth_report(points: Sequence[tuple[int, Fraction]]) -> GrowthReport:
    """Fit growth of positive partial sums sampled at increasing N >= 2."""
    pts = [(int(n), Fraction(s)) for n, s in points]
    if len(pts) < 2:
        raise DiophantineError("growth_report needs at least two sample points")
    if any(n < 2 for n, _ in pts):
        raise DiophantineError("growth_report needs N >= 2 (log log N)")
    if any(s <= 0 for _, s in pts):
        raise DiophantineError("growth_report needs positive sums (all-zero input?)")
    ns = np.array([n for n, _ in pts], dtype=float)
    ss = np.array([float(s) for _, s in pts], dtype=float)
    y = np.log(ss)

    def fit(x: np.ndarray) -> tuple[float, float]:
        coef = np.polyfit(x, y, 1)
        resid = y - np.polyval(coef, x)
        return float(coef[0]), float(np.sqrt(np.mean(resid**2)))

    s_ll, r_ll = fit(np.log(np.log(ns)))
    s_l, r_l = fit(np.log(ns))
    return GrowthReport(tuple(pts), s_ll, r_ll, s_l, r_l)
