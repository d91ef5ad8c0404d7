"""
Ambient forms and model-space helpers.

Spherical patterns live on the unit sphere in Euclidean R^3; hyperbolic ones on
the upper sheet of the hyperboloid <p, p> = -1 in Minkowski space R^{2,1} with
<x, y> = x1 y1 + x2 y2 - x3 y3. Every helper takes the flavor explicitly so
that the two metrics are never mixed.
"""

from __future__ import annotations

from enum import Enum
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray

_LORENTZ = np.array([1.0, 1.0, -1.0])
NORTH = np.array([0.0, 0.0, 1.0])


class Flavor(str, Enum):
    """Ambient geometry of a ring pattern."""

    SPHERICAL = "spherical"
    HYPERBOLIC = "hyperbolic"

    @property
    def model_norm(self) -> float:
        """<p, p> for points of the model surface."""
        return 1.0 if self is Flavor.SPHERICAL else -1.0

    @property
    def signature(self) -> NDArray[np.float64]:
        """Diagonal of the ambient bilinear form."""
        return np.ones(3) if self is Flavor.SPHERICAL else _LORENTZ


def inner(a: ArrayLike, b: ArrayLike, flavor: Flavor) -> Any:
    """Ambient bilinear form, contracted over the last axis."""
    return np.sum(np.asarray(a) * flavor.signature * np.asarray(b), axis=-1)


def squared_norm(a: ArrayLike, flavor: Flavor) -> Any:
    return inner(a, a, flavor)


def length(a: ArrayLike, flavor: Flavor) -> Any:
    """sqrt(|<a, a>|); the length of spacelike vectors in Minkowski space."""
    return np.sqrt(np.abs(squared_norm(a, flavor)))


def lower(a: ArrayLike, flavor: Flavor) -> NDArray[np.float64]:
    """J a, so that <a, b> = (J a) . b."""
    return np.asarray(a, dtype=float) * flavor.signature


def normal_cross(a: ArrayLike, b: ArrayLike, flavor: Flavor) -> NDArray[np.float64]:
    """Vector orthogonal to a and b in the ambient form."""
    return lower(np.cross(a, b), flavor)


def project_to_model(p: ArrayLike, flavor: Flavor) -> NDArray[np.float64]:
    """Rescale points onto the unit sphere or the upper hyperboloid sheet."""
    pts = np.asarray(p, dtype=float)
    scale = np.sqrt(np.abs(squared_norm(pts, flavor)))
    out = pts / scale[..., None]
    if flavor is Flavor.HYPERBOLIC:
        out = np.where(out[..., 2:3] < 0, -out, out)
    return out


def tangent_direction(p: ArrayLike, w: ArrayLike, flavor: Flavor) -> NDArray[np.float64]:
    """Unit tangent at p of the geodesic toward w."""
    p = np.asarray(p, dtype=float)
    w = np.asarray(w, dtype=float)
    t = w - (inner(p, w, flavor) / flavor.model_norm) * p
    return t / length(t, flavor)


def rotate_tangent(
    p: ArrayLike, v: ArrayLike, angle: float, flavor: Flavor
) -> NDArray[np.float64]:
    """Rotate the unit tangent v at p counterclockwise by angle."""
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    return np.cos(angle) * v + np.sin(angle) * normal_cross(p, v, flavor)


def exp_map(p: ArrayLike, v: ArrayLike, rho: float, flavor: Flavor) -> NDArray[np.float64]:
    """Point at signed geodesic distance rho from p along unit tangent v."""
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    if flavor is Flavor.SPHERICAL:
        return np.cos(rho) * p + np.sin(rho) * v
    return np.cosh(rho) * p + np.sinh(rho) * v


def distance(p: ArrayLike, w: ArrayLike, flavor: Flavor) -> Any:
    """Geodesic distance on the model surface."""
    c = inner(p, w, flavor)
    if flavor is Flavor.SPHERICAL:
        return np.arccos(np.clip(c, -1.0, 1.0))
    return np.arccosh(np.maximum(-c, 1.0))


def chord_squared(rho: ArrayLike, flavor: Flavor) -> Any:
    """<p - w, p - w> for model points at geodesic distance rho."""
    half = 0.5 * np.asarray(rho, dtype=float)
    if flavor is Flavor.SPHERICAL:
        return 4.0 * np.sin(half) ** 2
    return 4.0 * np.sinh(half) ** 2


def chord(rho: ArrayLike, flavor: Flavor) -> Any:
    """Ambient length of the chord spanning geodesic distance |rho|."""
    return np.sqrt(chord_squared(rho, flavor))


def oriented_angle(
    p: ArrayLike, u: ArrayLike, w: ArrayLike, flavor: Flavor
) -> float:
    """Counterclockwise angle at p from the direction of u to that of w, in (-pi, pi]."""
    tu = tangent_direction(p, u, flavor)
    tw = tangent_direction(p, w, flavor)
    cos = float(inner(tu, tw, flavor))
    sin = float(inner(normal_cross(p, tu, flavor), tw, flavor))
    return float(np.arctan2(sin, cos))


def to_plane(points: ArrayLike) -> NDArray[np.float64]:
    """
    Stereographic projection from the south pole, (x, y) / (1 + z).

    On the hyperboloid the same formula is the Poincare disk model.
    """
    pts = np.asarray(points, dtype=float)
    return pts[..., :2] / (1.0 + pts[..., 2:3])


stereographic = to_plane
poincare_disk = to_plane
