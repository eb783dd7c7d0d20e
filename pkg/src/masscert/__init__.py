"""Finite, exact machinery for mass-transference style constructions.

Sup-norm ball geometry over the rationals, Diophantine ball families,
divergence-criterion partial sums, a nested selection construction with a
recursively split measure and machine-checkable certificates, and
box-dimension estimation on the line.  Every inequality that a certificate
claims is decided in exact arithmetic; floats appear only in reports.
"""

from .criteria import (
    GrowthReport,
    PartialSum,
    growth_report,
    sum_joint_hausdorff,
    sum_joint_lebesgue,
    sum_pairwise_hausdorff,
    sum_pairwise_lebesgue,
)
from .dimension import (
    BoxReport,
    DimensionError,
    MdpBound,
    box_dim_estimate,
    jb_dimension,
    leaf_cover_upper,
    mdp_lower_bound,
    premeasure_upper,
    sandwich_check,
)
from .diophantine import (
    ApproximatingFunction,
    BallFamily,
    CoprimeMode,
    DiophantineError,
    DyadicBallFamily,
    FareyBallFamily,
)
from .exactpow import PrecisionError, Pow, XR, xr_bounds, xr_cmp, xr_pow, xr_sign
from .geometry import (
    Ball,
    DimensionFunction,
    GeometryError,
    ball_measure,
    ball_volume,
    balls_disjoint,
    balls_intersect,
    contains_ball,
    contains_point,
    f_volume,
    five_r_cover,
    scale_ball,
    transform_ball,
)
from .serialize import (
    SCHEMA_VERSION,
    decode_certificate,
    decode_tree,
    encode_certificate,
    encode_tree,
    to_json,
    verify_tree_document,
)
from .transference import (
    BudgetExhausted,
    CantorTree,
    Certificate,
    ComparableMeasures,
    ConstructionParams,
    FreeRegionDeficit,
    PackingDeficit,
    SampledBound,
    SelectionError,
    TransferenceError,
    build_cantor,
    make_certificate,
    select_capture,
    verify_ball_bound,
)

__version__ = "0.1.0"

__all__ = [
    "ApproximatingFunction",
    "Ball",
    "BallFamily",
    "BoxReport",
    "BudgetExhausted",
    "CantorTree",
    "Certificate",
    "ComparableMeasures",
    "ConstructionParams",
    "CoprimeMode",
    "DimensionError",
    "DimensionFunction",
    "DiophantineError",
    "DyadicBallFamily",
    "FareyBallFamily",
    "FreeRegionDeficit",
    "GeometryError",
    "GrowthReport",
    "MdpBound",
    "PackingDeficit",
    "PartialSum",
    "Pow",
    "PrecisionError",
    "SampledBound",
    "SCHEMA_VERSION",
    "SelectionError",
    "TransferenceError",
    "XR",
    "ball_measure",
    "ball_volume",
    "balls_disjoint",
    "balls_intersect",
    "box_dim_estimate",
    "build_cantor",
    "contains_ball",
    "contains_point",
    "decode_certificate",
    "decode_tree",
    "encode_certificate",
    "encode_tree",
    "f_volume",
    "five_r_cover",
    "growth_report",
    "jb_dimension",
    "leaf_cover_upper",
    "make_certificate",
    "mdp_lower_bound",
    "premeasure_upper",
    "sandwich_check",
    "scale_ball",
    "select_capture",
    "sum_joint_hausdorff",
    "sum_joint_lebesgue",
    "sum_pairwise_hausdorff",
    "sum_pairwise_lebesgue",
    "to_json",
    "transform_ball",
    "verify_ball_bound",
    "verify_tree_document",
    "xr_bounds",
    "xr_cmp",
    "xr_pow",
    "xr_sign",
]
