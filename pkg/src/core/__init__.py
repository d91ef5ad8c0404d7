"""Core error types and handling."""

from .error_handler import ErrorHandler
from .exceptions import (
    ClosureViolation,
    CmcError,
    ConfigurationError,
    DegenerateFace,
    DomainError,
    ErrorSeverity,
    GeometryError,
    GraphValidationError,
    InfeasibleBoundary,
    LayoutInconsistency,
    NoBracket,
    NonConvergence,
    NonConvergentFamily,
    NoRoot,
    NotParallel,
    NotPlanar,
    SaddleEscape,
    TangencyViolation,
)

__all__ = [
    "CmcError",
    "ConfigurationError",
    "DomainError",
    "GraphValidationError",
    "NonConvergence",
    "SaddleEscape",
    "InfeasibleBoundary",
    "NonConvergentFamily",
    "NoRoot",
    "NoBracket",
    "GeometryError",
    "LayoutInconsistency",
    "TangencyViolation",
    "ClosureViolation",
    "DegenerateFace",
    "NotPlanar",
    "NotParallel",
    "ErrorSeverity",
    "ErrorHandler",
]
