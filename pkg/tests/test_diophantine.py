"""Number-theoretic generators against independent oracles."""

import random
from fractions import Fraction
from math import gcd

import pytest
import sympy

from masscert.diophantine import (
    ApproximatingFunction,
    CoprimeMode,
    DiophantineError,
    DyadicBallFamily,
    FareyBallFamily,
    NotExactlyRational,
    ball_family,
    count_rationals,
    count_solutions,
    enumerate_rationals,
    euler_phi,
    theta_identity_holds,
    theta_transform,
)
from masscert.geometry import DimensionFunction

F = Fraction


# --- totient -------------------------------------------------------------------


def test_euler_phi_examples():
    assert euler_phi(1) == 1
    assert euler_phi(7) == 6
    assert euler_phi(12) == 4
    with pytest.raises(DiophantineError):
        euler_phi(0)


def test_euler_phi_against_oracles():
    for n in range(1, 200):
        assert euler_phi(n) == sum(1 for i in range(1, n + 1) if gcd(i, n) == 1)
    for n in (720, 997, 1024, 5040, 9973):
        assert euler_phi(n) == sympy.totient(n)


# --- rational enumeration --------------------------------------------------------


def test_enumerate_rationals_small():
    pts = list(enumerate_rationals(1, 3))
    vals = [p.fractions()[0] for p in pts]
    assert vals == [F(0), F(1), F(1, 2), F(1, 3), F(2, 3)]


def test_enumerate_count_identity():
    # k=1 count is 1 + sum phi(q) (phi(1) = 1 covers both endpoints at q=1)
    for Q in (1, 2, 10, 97, 300):
        want = 1 + sum(int(sympy.totient(q)) for q in range(1, Q + 1))
        assert count_rationals(1, Q) == want
        if Q <= 97:
            assert len(list(enumerate_rationals(1, Q))) == want


def test_enumerate_modes():
    # joint admits (1, 0; 2): the coordinates jointly generate a unit
    joint = {(p.p, p.q) for p in enumerate_rationals(2, 2, CoprimeMode.JOINT)}
    assert ((1, 0), 2) in joint
    pair = {(p.p, p.q) for p in enumerate_rationals(2, 2, CoprimeMode.PAIRWISE)}
    assert ((1, 0), 2) not in pair
    assert pair <= joint
    for pt in enumerate_rationals(2, 12, CoprimeMode.PAIRWISE):
        assert all(0 <= pi <= pt.q for pi in pt.p)
        assert all(gcd(pi, pt.q) == 1 for pi in pt.p) or pt.q == 1
    for pt in enumerate_rationals(2, 12, CoprimeMode.JOINT):
        g = 0
        for pi in pt.p:
            g = gcd(g, pi)
        assert gcd(g, pt.q) == 1


def test_count_rationals_vs_enumeration():
    for k, Q, mode in [(1, 50, "pairwise"), (2, 20, "pairwise"), (2, 20, "joint"), (3, 8, "joint")]:
        m = CoprimeMode(mode)
        assert count_rationals(k, Q, m) == sum(1 for _ in enumerate_rationals(k, Q, m))


# --- approximating functions ------------------------------------------------------


def test_psi_validation_and_values():
    psi = ApproximatingFunction.power(2)
    assert psi.value(3) == F(1, 9)
    tab = ApproximatingFunction.from_table([F(1), F(1, 5), F(3)])
    assert tab.value(3) == 3 and tab.domain_cap == 3
    with pytest.raises(DiophantineError):
        tab.value(4)
    with pytest.raises(DiophantineError):
        ApproximatingFunction.from_table([F(1), F(0)])
    with pytest.raises(NotExactlyRational):
        ApproximatingFunction.power(F(1, 2)).value(2)  # 2**-(1/2)


# --- solution counting -------------------------------------------------------------


def brute_count(y, psi, Q, mode):
    total = 0
    for q in range(1, Q + 1):
        w = psi.value(q)
        for vec in _vectors(len(y), q):
            if mode is CoprimeMode.PAIRWISE:
                ok = q == 1 or all(gcd(p, q) == 1 for p in vec)
                if q == 1:
                    ok = all(p in (0, 1) for p in vec)
            else:
                g = 0
                for p in vec:
                    g = gcd(g, p)
                ok = gcd(g, q) == 1
            if ok and all(abs(yi - F(p, q)) < w / q for yi, p in zip(y, vec)):
                total += 1
    return total


def _vectors(k, q):
    import itertools

    return itertools.product(range(q + 1), repeat=k)


def test_count_solutions_examples():
    psi = ApproximatingFunction.power(2)
    # q=1 contributes p=0 and p=1 (psi(1)=1 reaches everything), q=2 adds 1/2
    assert count_solutions([F(1, 2)], psi, 1) == 2
    assert count_solutions([F(1, 2)], psi, 2) - count_solutions([F(1, 2)], psi, 1) == 1
    # with tiny radii only the exact hit p/q = 1/3 survives
    tab = ApproximatingFunction.from_table([F(1, 100)] * 10)
    assert count_solutions([F(1, 3)], tab, 10) == 1


def test_count_solutions_against_brute_force():
    rng = random.Random(11)
    psi = ApproximatingFunction.power(1)
    for _ in range(30):
        y = [F(rng.randrange(0, 257), 256)]
        for mode in (CoprimeMode.PAIRWISE, CoprimeMode.JOINT):
            assert count_solutions(y, psi, 60, mode) == brute_count(y, psi, 60, mode)
    for _ in range(5):
        y = [F(rng.randrange(0, 65), 64), F(rng.randrange(0, 65), 64)]
        for mode in (CoprimeMode.PAIRWISE, CoprimeMode.JOINT):
            assert count_solutions(y, psi, 25, mode) == brute_count(y, psi, 25, mode)


# --- theta transform -----------------------------------------------------------------


def test_theta_power_algebra():
    psi = ApproximatingFunction.power(2)
    # f = Power(k) leaves psi unchanged
    assert theta_transform(psi, DimensionFunction(F(1)), 1).tau == psi.tau
    assert theta_transform(psi, DimensionFunction(F(2)), 2).tau == psi.tau
    # k=1, s = 2/(1+tau): theta exponent collapses to exactly 1
    for tau in (2, 3, 5):
        th = theta_transform(
            ApproximatingFunction.power(tau), DimensionFunction(F(2, 1 + tau)), 1
        )
        assert th.tau == 1
    assert theta_transform(ApproximatingFunction.power(3), DimensionFunction(F(1)), 2).tau == 1


def test_theta_identity_pointwise():
    combos = [
        (ApproximatingFunction.power(2), DimensionFunction(F(2, 3)), 1),
        (ApproximatingFunction.power(3), DimensionFunction(F(1, 2)), 1),
        (ApproximatingFunction.power(1), DimensionFunction(F(2)), 2),
        (ApproximatingFunction.from_table([F(1), F(1, 4), F(1, 27)]), DimensionFunction(F(1)), 1),
    ]
    for psi, f, k in combos:
        cap = psi.domain_cap or 40
        for q in range(1, cap + 1):
            assert theta_identity_holds(psi, f, k, q)


def test_theta_table_irrational_rejected():
    tab = ApproximatingFunction.from_table([F(1), F(1, 2)])  # (1/4)^(1/2) at q=2 is fine
    th = theta_transform(tab, DimensionFunction(F(1, 2)), 1)
    assert th.value(2) == 2 * F(1, 2)
    bad = ApproximatingFunction.from_table([F(1), F(1, 3)])
    with pytest.raises(NotExactlyRational):
        theta_transform(bad, DimensionFunction(F(1, 2)), 1)


# --- ball families ------------------------------------------------------------------


def test_farey_family_radii_and_counts():
    psi = ApproximatingFunction.power(2)
    fam = FareyBallFamily(psi, k=1, mode=CoprimeMode.PAIRWISE, q_cap=40)
    assert fam.block_radius(2) == F(1, 8)  # psi(2)/2
    assert fam.block_radius(1) == 1
    balls = dict(fam.iter_block(2))
    centers = sorted(b.center[0] for b in balls.values())
    assert centers == [F(1, 2)]
    assert fam.total() == count_rationals(1, 40)
    assert fam.block_size(1) == 2 and fam.block_size(7) == 6


def test_family_index_bookkeeping():
    fam = FareyBallFamily(ApproximatingFunction.power(2), 1, CoprimeMode.PAIRWISE, 60)
    running = 1
    for q in fam.block_keys():
        assert fam.index_start(q) == running
        idxs = [i for i, _ in fam.iter_block(q)]
        assert idxs == list(range(running, running + fam.block_size(q)))
        running += fam.block_size(q)
        assert fam.block_of_index(fam.index_start(q)) == q
        assert fam.block_of_index(running - 1) == q


def test_family_envelope_is_suffix_max():
    fam = FareyBallFamily(ApproximatingFunction.power(2), 1, CoprimeMode.PAIRWISE, 50)
    keys = list(fam.block_keys())
    for i, q in enumerate(keys):
        assert fam.envelope(q) == max(fam.block_radius(p) for p in keys[i:])
    # power psi has decreasing radii, so the envelope is the block radius
    assert all(fam.envelope(q) == fam.block_radius(q) for q in keys)


def test_family_window_matches_filter():
    fam = FareyBallFamily(ApproximatingFunction.power(2), 1, CoprimeMode.PAIRWISE, 60)
    for q in (7, 12, 30, 59):
        win = [(F(1, 5), F(2, 3))]
        got = {i for i, _ in fam.iter_block_window(q, win)}
        want = {
            i
            for i, b in fam.iter_block(q)
            if F(1, 5) <= b.center[0] <= F(2, 3)
        }
        assert got == want


def test_dyadic_family_geometry():
    fam = DyadicBallFamily(k=1, g_min=1, g_cap=10, radius_power=2)
    assert fam.block_size(3) == 8
    assert fam.block_radius(3) == F(1, 2 ** (4 * 2))
    balls = [b for _, b in fam.iter_block(2)]
    assert [b.center[0] for b in balls] == [F(1, 8), F(3, 8), F(5, 8), F(7, 8)]
    assert fam.total() == sum(2**g for g in range(1, 11))
    k2 = DyadicBallFamily(k=2, g_min=1, g_cap=5)
    assert k2.block_size(3) == 64


def test_ball_family_factory():
    fam = ball_family(ApproximatingFunction.power(2), k=1, mode="pairwise", q_cap=10)
    assert isinstance(fam, FareyBallFamily)
    assert fam.manifest()["q_cap"] == 10
    assert fam.manifest()["count"] == fam.total()
