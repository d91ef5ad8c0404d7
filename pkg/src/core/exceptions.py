"""Exception hierarchy for the discrete cmc construction pipeline."""

from dataclasses import dataclass
from enum import Enum
from typing import Any, ClassVar


class ErrorSeverity(Enum):
    """Error severity levels."""

    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"
    CRITICAL = "critical"


@dataclass
class CmcError(Exception):
    """Base exception for the construction pipeline."""

    message: str
    severity: ErrorSeverity
    context: dict[str, Any] | None = None
    recoverable: bool = False

    # CLI exit code; 1 is reserved for unexpected failures
    exit_code: ClassVar[int] = 1

    def __str__(self) -> str:
        return f"[{self.severity.value.upper()}] {self.message}"


def _with_context(kwargs: dict[str, Any], **facts: Any) -> dict[str, Any]:
    context = dict(kwargs.pop("context", None) or {})
    for key, value in facts.items():
        if value is not None:
            context[key] = value
    return context


class ConfigurationError(CmcError):
    """Configuration-related error."""

    exit_code = 4

    def __init__(
        self,
        message: str,
        config_key: str | None = None,
        severity: ErrorSeverity = ErrorSeverity.HIGH,
        **kwargs: Any,
    ):
        context = _with_context(kwargs, config_key=config_key)
        super().__init__(message, severity, context, **kwargs)


class DomainError(CmcError):
    """Argument outside the mathematical domain of an operation."""

    exit_code = 4

    def __init__(
        self,
        message: str,
        parameter: str | None = None,
        value: Any = None,
        severity: ErrorSeverity = ErrorSeverity.HIGH,
        **kwargs: Any,
    ):
        context = _with_context(kwargs, parameter=parameter, value=value)
        super().__init__(message, severity, context, **kwargs)


class GraphValidationError(CmcError):
    """Combinatorial input that is not a valid S-quad graph."""

    exit_code = 4

    def __init__(
        self,
        message: str,
        violations: list[str] | None = None,
        severity: ErrorSeverity = ErrorSeverity.HIGH,
        **kwargs: Any,
    ):
        context = _with_context(kwargs, violations=violations)
        super().__init__(message, severity, context, **kwargs)


class NonConvergence(CmcError):
    """Iterative solver stopped before reaching its tolerance."""

    exit_code = 3

    def __init__(
        self,
        message: str,
        residual: float | None = None,
        iterations: int | None = None,
        severity: ErrorSeverity = ErrorSeverity.HIGH,
        **kwargs: Any,
    ):
        context = _with_context(kwargs, residual=residual, iterations=iterations)
        super().__init__(message, severity, context, **kwargs)


class SaddleEscape(NonConvergence):
    """Inner maximization of the spherical functional is unbounded."""


class InfeasibleBoundary(NonConvergence):
    """Minimizer leaves the admissible box [0, 2K]."""


class NonConvergentFamily(NonConvergence):
    """A q -> 1 family does not approach its limit."""


class NoRoot(NonConvergence):
    """A scalar scan found no sign change."""


class NoBracket(NonConvergence):
    """Root finder endpoints do not bracket a sign change."""


class GeometryError(CmcError):
    """Constructed geometry violates an invariant beyond tolerance."""

    exit_code = 2

    def __init__(
        self,
        message: str,
        residual: float | None = None,
        where: Any = None,
        severity: ErrorSeverity = ErrorSeverity.HIGH,
        **kwargs: Any,
    ):
        context = _with_context(kwargs, residual=residual, where=where)
        super().__init__(message, severity, context, **kwargs)


class LayoutInconsistency(GeometryError):
    """Placed ring centers and touching points do not fit together."""


class TangencyViolation(GeometryError):
    """A Koebe net edge misses its tangent sphere."""


class ClosureViolation(GeometryError):
    """A discrete one-form does not close around a cycle."""


class DegenerateFace(GeometryError):
    """Face with vanishing area or ill-conditioned normal."""


class NotPlanar(GeometryError):
    """Polygon is not planar within tolerance."""


class NotParallel(GeometryError):
    """Polygons do not have parallel corresponding edges."""
