"""Cones, orders, lattice operations, seminorms and normality constants."""

from .cones import (
    DEFAULT_TOL,
    OrderInterval,
    PolyCone,
    as_vector,
    cone_from_dict,
    cone_member,
    full_hull_member,
    is_pointed,
    order_le,
)
from .lattice import LatticeRecord, dyadic_samples, identity_residuals, lattice_ops
from .normality import NormalityEstimate, minkowski_functional, normality_gamma, o_bounded_sup
from .seminorms import (
    MaxSeminorm,
    PolytopeGauge,
    Seminorm,
    WeightedL1,
    WeightedSup,
    l1_norm,
    seminorm_from_dict,
    sup_norm,
)

SeminormSpec = Seminorm

__all__ = [
    "DEFAULT_TOL", "OrderInterval", "PolyCone", "as_vector", "cone_from_dict", "cone_member",
    "full_hull_member", "is_pointed", "order_le", "LatticeRecord", "dyadic_samples",
    "identity_residuals", "lattice_ops", "NormalityEstimate", "minkowski_functional",
    "normality_gamma", "o_bounded_sup", "MaxSeminorm", "PolytopeGauge", "Seminorm",
    "SeminormSpec", "WeightedL1", "WeightedSup", "l1_norm", "seminorm_from_dict", "sup_norm",
]
