"""Variational solvers for orthogonal ring patterns."""

from .boundary import (
    NEGATIVE,
    POSITIVE,
    BoundaryData,
    BoundaryKind,
    dirichlet_boundary,
    orientation_from_angles,
    phi_assignment,
    rectangle_boundary,
)
from .functional import (
    PatternSolution,
    RingFunctional,
    functional_value_grad,
    hessian,
    interior_residuals,
)
from .solvers import SolverSettings, solve, solve_hyperbolic, solve_spherical_reduced

__all__ = [
    "NEGATIVE",
    "POSITIVE",
    "BoundaryData",
    "BoundaryKind",
    "dirichlet_boundary",
    "orientation_from_angles",
    "phi_assignment",
    "rectangle_boundary",
    "PatternSolution",
    "RingFunctional",
    "functional_value_grad",
    "hessian",
    "interior_residuals",
    "SolverSettings",
    "solve",
    "solve_hyperbolic",
    "solve_spherical_reduced",
]
