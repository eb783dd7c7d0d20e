"""Acceptance gate: one test per release criterion, at the stated budgets.

Each test prints a single `criterion N: PASS` line (visible with -s) and
enforces its wall-clock budget; `pytest -v` gives the canonical pass/fail
line per criterion.
"""

import random
import time
from fractions import Fraction

from sympy import totient

from masscert.criteria import (
    sum_joint_lebesgue,
    sum_pairwise_hausdorff,
    sum_pairwise_lebesgue,
)
from masscert.diophantine import (
    ApproximatingFunction,
    CoprimeMode,
    DyadicBallFamily,
    FareyBallFamily,
    count_rationals,
    count_solutions,
    enumerate_rationals,
    theta_transform,
)
from masscert.dimension import box_dim_estimate, mdp_lower_bound
from masscert.exactpow import xr_cmp
from masscert.geometry import (
    Ball,
    DimensionFunction,
    GeometryError,
    ball_measure,
    balls_disjoint,
    contains_ball,
    cover_witnesses,
    f_volume,
    five_r_cover,
    geometric_containment_check,
    scale_ball,
    transform_ball,
)
from masscert.serialize import encode_certificate, encode_tree, to_json
from masscert.transference import (
    ConstructionParams,
    _parts_cmp,
    build_cantor,
    epsilon_for,
    make_certificate,
    select_capture,
    selection_start,
    verify_ball_bound,
)

F = Fraction


def _budget(n, t0, limit, detail=""):
    elapsed = time.perf_counter() - t0
    assert elapsed < limit, f"criterion {n} exceeded its {limit}s budget: {elapsed:.2f}s"
    print(f"criterion {n}: PASS ({elapsed:.2f}s < {limit}s){' - ' + detail if detail else ''}")


def _demo_family(q_cap=6000):
    return FareyBallFamily(
        ApproximatingFunction.power(2), k=1, mode=CoprimeMode.PAIRWISE, q_cap=q_cap
    )


def _demo_build():
    return build_cantor(
        _demo_family(),
        DimensionFunction(F(2, 3)),
        ConstructionParams(k=1, eta=2, depth=3, mode="demo"),
    )


def test_criterion_1_transform_and_volume_identities():
    """10^4 random balls: transform round-trips and preserves f-volume, < 1s."""
    rng = random.Random(0)
    t0 = time.perf_counter()
    for _ in range(10_000):
        k = rng.choice((1, 2, 3))
        center = tuple(F(rng.randrange(0, 65), 64) for _ in range(k))
        u, v = rng.randrange(1, 7), rng.randrange(1, 5)
        base = F(rng.randrange(1, 13), rng.randrange(2, 13))
        if base >= 1:
            base = 1 / (1 + base)
        ball = Ball(center, base**v)
        f = DimensionFunction(F(u, v))
        g = DimensionFunction(F(1))
        t = transform_ball(ball, f, g)
        assert t.rational_radius() == base**u
        back = transform_ball(t, g, f)
        assert back.center == ball.center
        assert back.rational_radius() == ball.rational_radius()
        assert xr_cmp(f_volume(t, g), f_volume(ball, f)) == 0
    _budget(1, t0, 1.0)


def test_criterion_2_five_r_covering():
    """100 random families of <= 500 balls, k in {1, 2}: disjoint 5r cover, < 30s."""
    rng = random.Random(1)
    t0 = time.perf_counter()
    for fam_i in range(100):
        k = 1 + (fam_i % 2)
        n = rng.randrange(50, 501)
        balls = [
            Ball(
                tuple(F(rng.randrange(0, 241), 240) for _ in range(k)),
                F(rng.randrange(3, 31), 240),
            )
            for _ in range(n)
        ]
        kept = five_r_cover(balls)
        assert kept
        # pairwise disjoint, checked by a sweep over the first coordinate
        order = sorted(range(len(kept)), key=lambda i: kept[i].center[0])
        max_r = max(b.rational_radius() for b in kept)
        for a_pos, i in enumerate(order):
            for j in order[a_pos + 1 :]:
                if kept[j].center[0] - kept[i].center[0] > 2 * max_r:
                    break
                assert balls_disjoint(kept[i], kept[j])
        # every input ball sits inside the 5-scaling of its witness
        for b, w in zip(balls, cover_witnesses(balls, kept)):
            g = kept[w]
            assert g.rational_radius() >= b.rational_radius()
            assert contains_ball(scale_ball(g, 5), b)
    _budget(2, t0, 30.0)


def test_criterion_3_containment_lemma_property():
    """10^4 sampled (A, M, c >= 3): whenever the premises hold, both
    conclusions hold, < 10s."""
    rng = random.Random(0)
    t0 = time.perf_counter()
    checked = 0
    for _ in range(10_000):
        k = rng.choice((1, 2))
        A = Ball(
            tuple(F(rng.randrange(-16, 17), 8) for _ in range(k)),
            F(rng.randrange(1, 65), 32),
        )
        M = Ball(
            tuple(F(rng.randrange(-16, 17), 8) for _ in range(k)),
            F(rng.randrange(1, 65), 32),
        )
        c = F(rng.randrange(3, 12))
        try:
            contains, measures = geometric_containment_check(A, M, c)
        except GeometryError:
            continue  # premises not satisfied for this triple
        checked += 1
        assert contains and measures
    assert checked >= 500, f"only {checked} sampled triples met the premises"
    _budget(3, t0, 10.0, f"{checked} non-vacuous triples")


def test_criterion_4_number_theory_oracles():
    """Counting and series oracles agree up to N, Q = 10^4; the N = 4
    divergence partial sum is exactly 115/72, < 60s."""
    t0 = time.perf_counter()
    psi1 = ApproximatingFunction.power(1)
    assert sum_pairwise_lebesgue(psi1, 1, 4).value == F(115, 72)
    val = sum_pairwise_lebesgue(psi1, 1, 10_000).value
    assert val == sum(F(int(totient(n)), n * n) for n in range(1, 10_001))
    assert count_rationals(1, 10_000) == 1 + sum(int(totient(q)) for q in range(1, 10_001))
    assert count_rationals(2, 2_000, CoprimeMode.PAIRWISE) == 4 + sum(
        int(totient(q)) ** 2 for q in range(2, 2_001)
    )
    # enumeration matches the closed-form count on a smaller slice
    assert count_rationals(1, 300) == sum(1 for _ in enumerate_rationals(1, 300))
    # solution counting against a direct double loop
    import math

    psi2 = ApproximatingFunction.power(2)
    for y in (F(1, 3), F(2, 7), F(355, 113) - 3):
        got = count_solutions([y], psi2, 100)
        brute = sum(
            1
            for q in range(1, 101)
            for p in range(0, q + 1)
            if math.gcd(p, q) == 1 and abs(y - F(p, q)) <= F(1, q**3)
        )
        assert got == brute
    _budget(4, t0, 60.0)


def test_criterion_5_theta_exponent_identity():
    """10 (psi, f) pairs with s = 2/(1+tau): theta is exactly the exponent-1
    function, checked pointwise on 100 denominators, < 1s."""
    t0 = time.perf_counter()
    taus = [F(2), F(3), F(5, 2), F(7, 3), F(4), F(9, 4), F(5), F(11, 5), F(3, 2), F(13, 6)]
    assert len(taus) == 10
    for tau in taus:
        f = DimensionFunction(F(2) / (1 + tau))
        theta = theta_transform(ApproximatingFunction.power(tau), f, 1)
        assert theta.is_power and theta.tau == 1
        for q in range(1, 101):
            assert theta.value(q) == F(1, q)
    _budget(5, t0, 1.0)


def test_criterion_6_demo_construction_end_to_end():
    """Full demo run (k=1, tau=2, f = r^(2/3), depth 3): structural flags all
    true, leaf masses sum to 1 exactly, measure flags match the mode, the
    10^4-sample ratio constant is finite, and the mass-distribution bound is
    eta / C_emp, < 5min."""
    t0 = time.perf_counter()
    tree = _demo_build()
    for name in ("conservation", "separation", "nesting", "capture", "halving", "sublevel_count"):
        assert tree.flags[name] is True, name
    # demo constants deliberately break the per-node measure quota
    assert tree.flags["node_bound"] is False
    assert tree.flags["branch_volume"] is False
    assert tree.mu_exact
    assert sum(leaf.mu_point for leaf in tree.leaves()) == 1
    sampled = verify_ball_bound(tree, trials=10_000, seed=0)
    assert sampled.max_ratio_hi > 0  # finite, positive empirical constant
    assert sampled.max_ratio_lo <= sampled.max_ratio_hi
    cert = make_certificate(tree, sampled)
    bound = mdp_lower_bound(cert)
    assert bound.value == cert.eta / sampled.max_ratio_hi
    assert bound.claim == "tree-only"
    _budget(6, t0, 300.0, f"C_emp <= {float(sampled.max_ratio_hi):.4g}")


def test_criterion_7_capture_constants_and_threshold():
    """kappa and c3 from their defining formulas (1/320 and 1/102400 at k=1)
    and a selection that captures at least kappa * m(B), < 30s."""
    t0 = time.perf_counter()
    p = ConstructionParams(k=1, mode="faithful")
    assert p.kappa == F(1, 2) * (p.c1 / p.c2) ** 2 * F(1, 10) == F(1, 320)
    assert p.c3 == p.kappa * p.c1**2 / (2 * p.c2**2 * 10) == F(1, 102400)
    fam = DyadicBallFamily(k=1, g_min=1, g_cap=40, radius_power=1)
    params = ConstructionParams(k=1, eta=2, depth=2, mode="demo")
    f = DimensionFunction(F(1, 2))
    region = Ball((F(1, 2),), F(1, 4))
    eps = epsilon_for(params, f_volume(region, f), False)
    start = selection_start(fam, region, f, params, eps)
    sel = select_capture(fam, region, f, params, start)
    assert _parts_cmp(sel.kept_measure_parts(), [(params.kappa, ball_measure(region))]) >= 0
    for i, a in enumerate(sel.regions):
        assert contains_ball(region, a)
        for b in sel.regions[i + 1 :]:
            assert balls_disjoint(a, b)
    _budget(7, t0, 30.0)


def test_criterion_8_box_dimension_slopes():
    """Box-counting slope within 0.1 of 2/(1+tau) for tau in {2, 3} with
    denominators up to 2^12, < 2min."""
    t0 = time.perf_counter()
    scales = [2**j for j in range(4, 13)]
    slopes = {}
    for tau in (2, 3):
        report = box_dim_estimate(tau, scales)
        assert abs(report.slope - float(F(2, 1 + tau))) <= 0.1
        slopes[tau] = report.slope
    _budget(8, t0, 120.0, f"slopes {slopes[2]:.4f}, {slopes[3]:.4f}")


def test_criterion_9_construction_determinism():
    """Two end-to-end demo runs serialize to byte-identical JSON documents."""
    t0 = time.perf_counter()

    def run():
        tree = _demo_build()
        sampled = verify_ball_bound(tree, trials=2000, seed=0)
        cert = make_certificate(tree, sampled)
        return to_json(
            {"certificate": encode_certificate(cert), "tree": encode_tree(tree)}
        )

    a, b = run(), run()
    assert a == b
    _budget(9, t0, 300.0, f"{len(a)} bytes")
