"""Boundary data and the per-vertex right-hand sides of the ring equations."""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
from numpy.typing import NDArray

from ..core.exceptions import DomainError
from ..elliptic import Modulus, as_modulus
from ..geometry import Flavor
from ..quadgraph import SQuadGraph, white_neighbors

POSITIVE = 1
NEGATIVE = -1


class BoundaryKind(str, Enum):
    """Neumann prescribes boundary angles, Dirichlet boundary variables."""

    NEUMANN = "neumann"
    DIRICHLET = "dirichlet"


@dataclass(frozen=True)
class BoundaryData:
    """
    Boundary conditions of a ring pattern.

    ``orientation`` maps boundary white vertices to +1 or -1. When it is None
    the solvers take it from the signs of the boundary angles.
    """

    kind: BoundaryKind
    angles: Mapping[int, float] = field(default_factory=dict)
    fixed: Mapping[int, float] = field(default_factory=dict)
    orientation: Mapping[int, int] | None = None

    def sign(self, v: int) -> int:
        if self.orientation is None:
            return POSITIVE
        return self.orientation.get(v, POSITIVE)

    def with_orientation(self, orientation: Mapping[int, int]) -> BoundaryData:
        return replace(self, orientation=dict(orientation))

    def validate(self, g: SQuadGraph, q: float | Modulus) -> None:
        """Raise DomainError unless the data is admissible for g."""
        mod = as_modulus(q)
        boundary = g.boundary_whites

        if self.kind is BoundaryKind.NEUMANN:
            missing = [v for v in boundary if v not in self.angles]
            if missing:
                raise DomainError(
                    f"No boundary angle for vertices {missing[:8]}",
                    parameter="angles",
                    value=missing,
                )
            corners = set(g.corners)
            for v, theta in self.angles.items():
                if not math.isfinite(theta) or abs(theta) >= 2.0 * math.pi:
                    raise DomainError(
                        f"Boundary angle at {v} must lie in (-2pi, 2pi), got {theta}",
                        parameter="angles",
                        value=theta,
                    )
                if v in corners and abs(theta) >= math.pi:
                    raise DomainError(
                        f"Corner angle at {v} must satisfy |angle| < pi, got {theta}",
                        parameter="angles",
                        value=theta,
                    )
        else:
            missing = [v for v in boundary if v not in self.fixed]
            if missing:
                raise DomainError(
                    f"No boundary value for vertices {missing[:8]}",
                    parameter="fixed",
                    value=missing,
                )
            for v, value in self.fixed.items():
                if not 0.0 <= value <= 2.0 * mod.K:
                    raise DomainError(
                        f"Boundary value at {v} must lie in [0, 2K], got {value}",
                        parameter="fixed",
                        value=value,
                    )


def rectangle_boundary(
    g: SQuadGraph,
    side_angle: float = math.pi,
    corner_angles: Sequence[float] = (math.pi / 2,) * 4,
    overrides: Mapping[int, float] | None = None,
    orientation: Mapping[int, int] | None = None,
) -> BoundaryData:
    """
    Neumann data for a rectangle: one angle along the sides, one per corner.

    Corners are assigned counterclockwise starting at the lattice origin.
    """
    corners = g.corners
    if len(corners) != len(corner_angles):
        raise DomainError(
            f"Graph has {len(corners)} corners, got {len(corner_angles)} corner angles",
            parameter="corner_angles",
            value=list(corner_angles),
        )
    angles = {v: float(side_angle) for v in g.boundary_whites}
    angles.update({v: float(a) for v, a in zip(corners, corner_angles)})
    if overrides:
        angles.update({int(v): float(a) for v, a in overrides.items()})
    return BoundaryData(BoundaryKind.NEUMANN, angles=angles, orientation=orientation)


def dirichlet_boundary(
    g: SQuadGraph, values: float | Mapping[int, float]
) -> BoundaryData:
    """Dirichlet data fixing every boundary white vertex."""
    if isinstance(values, Mapping):
        fixed = {int(v): float(x) for v, x in values.items()}
    else:
        fixed = {v: float(values) for v in g.boundary_whites}
    return BoundaryData(BoundaryKind.DIRICHLET, fixed=fixed)


def phi_assignment(
    g: SQuadGraph, bd: BoundaryData, flavor: Flavor
) -> NDArray[np.float64]:
    """
    Right-hand side Phi per white vertex, in solver order.

    Spherical: 2pi inside, pi * n - angle on positively oriented boundary
    rings with n white neighbours, -angle on negatively oriented ones.
    Hyperbolic: -2pi inside, -angle on positively oriented boundary rings,
    -angle - pi at negatively oriented corners and -angle - 2pi elsewhere.
    Dirichlet vertices get 0; their variables are not free.
    """
    corners = set(g.corners)
    phi = np.zeros(len(g.white_vertices))
    for index, v in enumerate(g.white_vertices):
        if not g.is_boundary(v):
            phi[index] = 2.0 * math.pi if flavor is Flavor.SPHERICAL else -2.0 * math.pi
            continue
        if bd.kind is BoundaryKind.DIRICHLET:
            continue
        theta = bd.angles[v]
        positive = bd.sign(v) == POSITIVE
        if flavor is Flavor.SPHERICAL:
            n = len(white_neighbors(g, v))
            phi[index] = math.pi * n - theta if positive else -theta
        elif positive:
            phi[index] = -theta
        elif v in corners:
            phi[index] = -theta - math.pi
        else:
            phi[index] = -theta - 2.0 * math.pi
    return phi


def orientation_from_angles(g: SQuadGraph, bd: BoundaryData) -> BoundaryData:
    """
    Orient every boundary ring by the sign of its nominal angle.

    Each kite angle lies in (0, pi), so the boundary equation of a ring with
    n white neighbours only has solutions for angles in (0, n pi) when the
    ring is positively oriented and in (-n pi, 0) when it is negatively
    oriented, in both flavors. Data that already carries an orientation, and
    Dirichlet data, is returned unchanged.
    """
    if bd.kind is not BoundaryKind.NEUMANN or bd.orientation is not None:
        return bd
    return bd.with_orientation(
        {v: NEGATIVE if bd.angles[v] < 0.0 else POSITIVE for v in g.boundary_whites}
    )
