"""Session fixtures: the two construction runs most tests share.

Building a tree costs seconds, so the demo run (farey family, the CLI
defaults) and the faithful anchor run (dyadic family, small eta) are built
once and treated as read-only by every consumer.
"""

from fractions import Fraction

import pytest

from masscert.diophantine import (
    ApproximatingFunction,
    CoprimeMode,
    DyadicBallFamily,
    FareyBallFamily,
)
from masscert.geometry import DimensionFunction
from masscert.transference import (
    ConstructionParams,
    build_cantor,
    make_certificate,
    verify_ball_bound,
)


def demo_family(q_cap: int = 6000) -> FareyBallFamily:
    psi = ApproximatingFunction.power(2)
    return FareyBallFamily(psi, k=1, mode=CoprimeMode.PAIRWISE, q_cap=q_cap)


@pytest.fixture(scope="session")
def demo_tree():
    params = ConstructionParams(k=1, eta=2, depth=3, mode="demo")
    return build_cantor(demo_family(), DimensionFunction(Fraction(2, 3)), params)


@pytest.fixture(scope="session")
def demo_sampled(demo_tree):
    return verify_ball_bound(demo_tree, trials=2000, seed=0)


@pytest.fixture(scope="session")
def demo_cert(demo_tree, demo_sampled):
    return make_certificate(demo_tree, demo_sampled)


@pytest.fixture(scope="session")
def faithful_tree():
    # eta small enough that the prescribed sub-level counts stay tiny
    family = DyadicBallFamily(k=1, g_min=1, g_cap=45, radius_power=1)
    params = ConstructionParams(
        k=1, eta=Fraction(1, 2**17), depth=2, mode="faithful", index_budget=2**50
    )
    return build_cantor(family, DimensionFunction(Fraction(1, 2)), params)
