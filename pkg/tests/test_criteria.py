"""Divergence-criterion partial sums against naive-loop oracles."""

from fractions import Fraction

import pytest
import sympy

from masscert.criteria import (
    growth_report,
    sum_joint_hausdorff,
    sum_joint_lebesgue,
    sum_pairwise_hausdorff,
    sum_pairwise_lebesgue,
)
from masscert.diophantine import ApproximatingFunction, DiophantineError
from masscert.exactpow import qpow
from masscert.geometry import DimensionFunction

F = Fraction


def test_pairwise_lebesgue_hand_value():
    psi = ApproximatingFunction.power(1)
    # 1 + (1/4) + (2/9) + (1/8)
    assert sum_pairwise_lebesgue(psi, 1, 4).value == F(115, 72)


def test_pairwise_hausdorff_hand_value():
    psi = ApproximatingFunction.power(2)
    f = DimensionFunction(F(2, 3))
    s = sum_pairwise_hausdorff(psi, f, 1, 2)
    assert s.exact and s.value == F(5, 4)  # f(1) + f(1/8)


def test_joint_lebesgue_hand_value():
    # terms 1, 1/16, 1/81 are psi(n)^k for psi = n^-2, k = 2
    psi = ApproximatingFunction.power(2)
    assert sum_joint_lebesgue(psi, 2, 3).value == F(1393, 1296)


def test_single_term_and_table():
    f = DimensionFunction(F(1, 2))
    tab = ApproximatingFunction.from_table([F(1, 4)])
    assert sum_joint_hausdorff(tab, f, 1, 1).value == F(1, 2)  # f(1/4) * 1
    assert sum_pairwise_hausdorff(tab, f, 1, 1).value == F(1, 2)


def test_power_k_collapses_hausdorff_to_lebesgue():
    for k in (1, 2):
        fk = DimensionFunction(F(k))
        for tau in (1, 2, 3):
            psi = ApproximatingFunction.power(tau)
            for n in (1, 5, 40):
                assert (
                    sum_pairwise_hausdorff(psi, fk, k, n).value
                    == sum_pairwise_lebesgue(psi, k, n).value
                )
                assert (
                    sum_joint_hausdorff(psi, fk, k, n).value
                    == sum_joint_lebesgue(psi, k, n).value
                )


def test_sums_against_naive_oracle():
    psi = ApproximatingFunction.power(2)
    f = DimensionFunction(F(2, 3))
    N = 300
    phi = [0] + [int(sympy.totient(n)) for n in range(1, N + 1)]
    pl = sum(F(phi[n] * psi.value(n), n) ** 2 for n in range(1, N + 1))
    assert sum_pairwise_lebesgue(psi, 2, N).value == pl
    jl = sum(psi.value(n) ** 2 for n in range(1, N + 1))
    assert sum_joint_lebesgue(psi, 2, N).value == jl
    ph = sum(qpow(psi.value(n) / n, F(2, 3)) * phi[n] for n in range(1, N + 1))
    got = sum_pairwise_hausdorff(psi, f, 1, N)
    assert got.exact and got.value == ph
    jh = sum(qpow(psi.value(n) / n, F(2, 3)) * n for n in range(1, N + 1))
    got = sum_joint_hausdorff(psi, f, 1, N)
    assert got.exact and got.value == jh


def test_inexact_terms_round_down():
    psi = ApproximatingFunction.from_table([F(1), F(1, 3)])
    f = DimensionFunction(F(1, 2))
    s = sum_pairwise_hausdorff(psi, f, 1, 2)  # 1 + sqrt(1/6), irrational
    assert not s.exact
    from masscert.exactpow import pow_bounds

    lo, hi = pow_bounds(F(1, 6), F(1, 2), 256)
    assert s.value <= 1 + hi  # never overstates
    assert 1 + lo - s.value <= F(1, 2**100)  # and the down-rounding is tight


def test_partial_sums_nondecreasing():
    psi = ApproximatingFunction.power(3)
    vals = [sum_pairwise_lebesgue(psi, 1, n).value for n in range(1, 30)]
    assert all(a <= b for a, b in zip(vals, vals[1:]))


def test_validation():
    psi = ApproximatingFunction.power(1)
    with pytest.raises(DiophantineError):
        sum_pairwise_lebesgue(psi, 0, 4)
    with pytest.raises(DiophantineError):
        sum_joint_lebesgue(psi, 1, 0)


# --- growth diagnostics -------------------------------------------------------


def _oracle_points(term, j_lo, j_hi):
    # float accumulation is plenty for a slope fit (errors ~1e-12 vs sums ~1)
    total, n, pts = 0.0, 0, []
    for j in range(1, j_hi + 1):
        while n < 2**j:
            n += 1
            total += term(n)
        if j >= j_lo:
            pts.append((2**j, F(total)))
    return pts


def test_growth_report_harmonic():
    rep = growth_report(_oracle_points(lambda n: 1.0 / n, 3, 16))
    assert abs(rep.slope_loglog - 1.0) <= 0.2


def test_growth_report_convergent_flattens():
    rep = growth_report(_oracle_points(lambda n: 1.0 / (n * n), 3, 16))
    assert abs(rep.slope_log) <= 0.05


def test_growth_report_linear():
    pts = [(2**j, F(3) * 2**j) for j in range(1, 8)]
    rep = growth_report(pts)
    assert abs(rep.slope_log - 1.0) <= 1e-9


def test_growth_report_validation():
    with pytest.raises(DiophantineError):
        growth_report([(4, F(1))])
    with pytest.raises(DiophantineError):
        growth_report([(1, F(1)), (2, F(2))])
    with pytest.raises(DiophantineError):
        growth_report([(2, F(0)), (4, F(0))])
