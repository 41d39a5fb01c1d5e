"""Warped products, soliton transfer from the base, and torus integral identities."""

from .base import BaseFields
from .product import (
    WarpConstructionError,
    WarpError,
    WarpedProduct,
    build_warped,
    condition_e36_residual,
    lambda_base,
    lift_checks,
    required_fiber_scal,
    theorem3_verify,
    warped_scal_crosscheck,
    warped_scal_formula,
)
from .section33 import (
    Section33Fields,
    condition_rrr_details,
    condition_rrr_residual,
    section33_pointwise_residual,
)
from .torus import (
    PeriodicChart,
    PeriodicityError,
    compact_integral_checks,
    e56_trajectory,
    torus_integral,
)

__all__ = [
    "BaseFields",
    "PeriodicChart",
    "PeriodicityError",
    "Section33Fields",
    "WarpConstructionError",
    "WarpError",
    "WarpedProduct",
    "build_warped",
    "compact_integral_checks",
    "condition_e36_residual",
    "condition_rrr_details",
    "condition_rrr_residual",
    "e56_trajectory",
    "lambda_base",
    "lift_checks",
    "required_fiber_scal",
    "section33_pointwise_residual",
    "theorem3_verify",
    "torus_integral",
    "warped_scal_crosscheck",
    "warped_scal_formula",
]
