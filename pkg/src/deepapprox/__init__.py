"""Explicit deep networks of rectifier and binary step units that
approximate functions on the unit cube with certified sup-norm error."""

from .analysis import (
    build_shallow_baseline,
    count_breakpoints_1d,
    gap_experiment,
    required_breakpoints,
    size_lower_bound,
    telgarsky_capacity,
)
from .chebyshev import cheb_points, interpolate, lagrange_eval, remainder_bound
from .combinators import build_gaussian, build_ridge, combine_product, combine_sum, compose
from .decoder import build_decoder, truncate
from .grids import GridSpec
from .multivariate import (
    build_linear_product,
    build_multinomial,
    build_poly_then_chain,
    enumerate_multi_indices,
)
from .network import (
    Activation,
    NetBuilder,
    Network,
    NetworkFormatError,
    NodeRef,
    count,
    deserialize,
    eval,
    eval_batch,
    eval_grid,
    serialize,
    to_strict,
)
from .report import BuildReport
from .targets import ApproxTarget, exp_decay, exp_shift, get_target, half_sin, identity, polynomial, square, uncertified
from .univariate import build_monomials, build_polynomial, build_smooth, build_square

__version__ = "0.1.0"

__all__ = [
    "Activation",
    "ApproxTarget",
    "BuildReport",
    "GridSpec",
    "NetBuilder",
    "Network",
    "NetworkFormatError",
    "NodeRef",
    "build_decoder",
    "build_gaussian",
    "build_linear_product",
    "build_monomials",
    "build_multinomial",
    "build_poly_then_chain",
    "build_polynomial",
    "build_ridge",
    "build_shallow_baseline",
    "build_smooth",
    "build_square",
    "cheb_points",
    "combine_product",
    "combine_sum",
    "compose",
    "count",
    "count_breakpoints_1d",
    "deserialize",
    "enumerate_multi_indices",
    "eval",
    "eval_batch",
    "eval_grid",
    "exp_decay",
    "exp_shift",
    "gap_experiment",
    "get_target",
    "half_sin",
    "identity",
    "interpolate",
    "lagrange_eval",
    "polynomial",
    "remainder_bound",
    "required_breakpoints",
    "serialize",
    "size_lower_bound",
    "square",
    "telgarsky_capacity",
    "to_strict",
    "truncate",
    "uncertified",
]
