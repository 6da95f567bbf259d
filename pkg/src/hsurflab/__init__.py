"""Numerical laboratory for surfaces of prescribed mean curvature in R^3.

A surface has prescribed mean curvature ``H`` (a function on the unit sphere)
when its mean curvature at every point equals ``H`` evaluated at the unit
normal.  The mean curvature is the average of the principal curvatures, so the
unit sphere with its inward normal has mean curvature 1.
"""

from hsurflab.errors import (
    AxisCollisionError,
    ConstructionError,
    DiscretizationError,
    EvaluationError,
    HSurfError,
    MeshError,
    NonConvergenceError,
    VanishingDenominatorError,
)
from hsurflab.sphere_field import (
    CurvatureField,
    closure_integral,
    constant_field,
    estrella_constant,
    estrella_value,
    grad_s,
    hess_s,
    laplace_s,
    linear_field,
    positivity_range,
    symmetry_residual,
    zonal_field,
    zonal_poly_field,
)

__version__ = "0.1.0"

__all__ = [
    "AxisCollisionError",
    "ConstructionError",
    "CurvatureField",
    "DiscretizationError",
    "EvaluationError",
    "HSurfError",
    "MeshError",
    "NonConvergenceError",
    "VanishingDenominatorError",
    "closure_integral",
    "constant_field",
    "estrella_constant",
    "estrella_value",
    "grad_s",
    "hess_s",
    "laplace_s",
    "linear_field",
    "positivity_range",
    "symmetry_residual",
    "zonal_field",
    "zonal_poly_field",
]
