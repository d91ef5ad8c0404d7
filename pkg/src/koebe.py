"""
Two-sphere Koebe nets lifted from embedded ring patterns.

The sphere-vertex net has the vertices of G and edges alternately touching
the spheres of radius 1/sqrt(q) and sqrt(q); the circle-vertex net is its
dual. In the hyperbolic flavor both spheres are spacelike with squared radii
-1/q and -q and all metric quantities use the Minkowski form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np
from loguru import logger
from numpy.typing import NDArray

from .core.exceptions import DegenerateFace, TangencyViolation
from .elliptic import Modulus, jacobi
from .geometry import Flavor, inner, length, lower
from .layout import EmbeddedRingPattern, ring_radii
from .quadgraph import EdgeColor, SQuadGraph, VertexKind
from .ringpattern import PatternSolution


def edge_lengths(
    x: Any, mod: Modulus, flavor: Flavor, kind: VertexKind
) -> tuple[Any, Any]:
    """
    Signed lengths (horizontal, vertical) of the Koebe edges at a white vertex.

    Horizontal lengths carry the sign of cn and vanish when the inner circle
    degenerates to a point.
    """
    sn, cn, dn = jacobi(x, mod)
    root = math.sqrt(mod.q)
    sphere_like = (kind is VertexKind.SPHERE) == (flavor is Flavor.SPHERICAL)
    if sphere_like:
        return cn / (root * sn), dn / (root * sn)
    return root * cn, dn / root


def trig_edge_lengths(
    r: Any, R: Any, q: float, flavor: Flavor, kind: VertexKind
) -> tuple[Any, Any]:
    """The same lengths written through the ring radii."""
    root = math.sqrt(q)
    if flavor is Flavor.SPHERICAL:
        if kind is VertexKind.SPHERE:
            return np.tan(r) / root, root * np.tan(R)
        return root * np.sin(r), np.sin(R) / root
    if kind is VertexKind.SPHERE:
        return root * np.tanh(r), np.tanh(R) / root
    return np.sinh(r) / root, root * np.sinh(R)


def fundamental_piece_lengths(
    sol: PatternSolution,
) -> dict[tuple[int, int], tuple[float, float]]:
    """(trigonometric, elliptic) length of every S-edge (white, black)."""
    g = sol.graph
    mod = sol.modulus
    r, R = ring_radii(sol.values, mod, sol.flavor)
    result = {}
    for index, w in enumerate(g.white_vertices):
        kind = g.kinds[w]
        h_trig, v_trig = trig_edge_lengths(r[index], R[index], mod.q, sol.flavor, kind)
        h_ell, v_ell = edge_lengths(sol.values[index], mod, sol.flavor, kind)
        for b in g.neighbors[w]:
            if g.color(w, b) is EdgeColor.HORIZONTAL:
                result[(w, b)] = (float(h_trig), float(h_ell))
            else:
                result[(w, b)] = (float(v_trig), float(v_ell))
    return result


def _plus_on_horizontal(flavor: Flavor) -> bool:
    # horizontal sphere-net edges touch the larger sphere on S^2, the smaller on H^2
    return flavor is Flavor.SPHERICAL


@dataclass
class KoebePair:
    """
    Sphere-vertex and circle-vertex Koebe nets sharing one vertex array.

    ``points`` holds k_v for white vertices and, for black vertices, the
    tangent point of the sphere-vertex net edge through it.
    """

    flavor: Flavor
    pattern: EmbeddedRingPattern
    points: NDArray[np.float64]
    tangent_plus: dict[int, NDArray[np.float64]]
    tangent_minus: dict[int, NDArray[np.float64]]
    face_centers: dict[int, NDArray[np.float64]]
    r_plus: float
    r_minus: float

    @property
    def graph(self) -> SQuadGraph:
        return self.pattern.graph

    @property
    def q(self) -> float:
        return self.pattern.solution.q

    @property
    def polarity(self) -> float:
        """<k_c, k_s> for neighbouring circle and sphere vertices."""
        return self.flavor.model_norm

    def sphere_tangent(self, b: int) -> NDArray[np.float64]:
        """Tangent point of the sphere-vertex net edge through b."""
        return self.points[b]

    def circle_tangent(self, b: int) -> NDArray[np.float64]:
        """Tangent point of the circle-vertex net edge through b."""
        horizontal = self.graph.sphere_edge_color(b) is EdgeColor.HORIZONTAL
        if horizontal == _plus_on_horizontal(self.flavor):
            return self.tangent_minus[b]
        return self.tangent_plus[b]

    def koebe_point(self, v: int) -> NDArray[np.float64]:
        """
        Gauss map value on the central extension: the net vertex at sphere
        vertices, the face center at circle vertices, the tangent point at
        black vertices.
        """
        if self.graph.kinds[v] is VertexKind.CIRCLE:
            return self.face_centers[v]
        return self.points[v]

    def central_extension_points(self) -> NDArray[np.float64]:
        """koebe_point for every vertex, as one array."""
        out = self.points.copy()
        for c, center in self.face_centers.items():
            out[c] = center
        return out


def face_center(kp: KoebePair, c: int) -> NDArray[np.float64]:
    """
    Foot of the perpendicular from the origin onto the face of G around c.

    The face lies in the plane <x, k_c> = const, so the center is the
    multiple of k_c in that plane.
    """
    flavor = kp.flavor
    k_c = kp.points[c]
    norm = float(inner(k_c, k_c, flavor))
    if abs(norm) < 1e-14:
        raise DegenerateFace(f"Dual vector at {c} is null", where=c, residual=abs(norm))
    spheres = kp.graph.faces_of_G[c]
    offset = float(np.mean([inner(k_c, kp.points[s], flavor) for s in spheres]))
    return (offset / norm) * k_c


def lift(pat: EmbeddedRingPattern, tolerance: float = 1e-7) -> KoebePair:
    """
    Scale ring centers and touching points off the model surface.

    Raises:
        TangencyViolation: a net edge misses its sphere by more than tolerance
    """
    g = pat.graph
    flavor = pat.flavor
    sol = pat.solution
    q = sol.q
    root = math.sqrt(q)

    points = np.array(pat.points, dtype=float)
    index = g.white_index
    sn = jacobi(sol.values, sol.modulus).sn
    for w in g.white_vertices:
        s = sn[index[w]]
        scale = 1.0 / (root * s) if flavor is Flavor.SPHERICAL else root * s
        points[w] = scale * pat.points[w]

    tangent_plus: dict[int, NDArray[np.float64]] = {}
    tangent_minus: dict[int, NDArray[np.float64]] = {}
    plus_horizontal = _plus_on_horizontal(flavor)
    for b in g.black_vertices:
        tangent_plus[b] = pat.points[b] / root
        tangent_minus[b] = root * pat.points[b]
        horizontal = g.sphere_edge_color(b) is EdgeColor.HORIZONTAL
        points[b] = tangent_plus[b] if horizontal == plus_horizontal else tangent_minus[b]

    kp = KoebePair(
        flavor=flavor,
        pattern=pat,
        points=points,
        tangent_plus=tangent_plus,
        tangent_minus=tangent_minus,
        face_centers={},
        r_plus=1.0 / root,
        r_minus=root,
    )
    kp.face_centers = {c: face_center(kp, c) for c in g.circle_vertices}

    worst = tangency_residual(kp)
    if worst > tolerance:
        raise TangencyViolation(
            f"Koebe net tangency residual {worst:.3e} exceeds {tolerance:.1e}",
            residual=worst,
        )
    logger.info(f"Lifted Koebe pair: {len(g.white_vertices)} vertices, tangency {worst:.3e}")
    return kp


def _same_kind_pairs(
    g: SQuadGraph, kind: VertexKind
) -> list[tuple[int, int, int]]:
    pairs = []
    for b in g.black_vertices:
        ends = [w for w in g.neighbors[b] if g.kinds[w] is kind]
        if len(ends) == 2:
            pairs.append((b, ends[0], ends[1]))
    return pairs


def _tangency(
    t: NDArray[np.float64], a: NDArray[np.float64], b: NDArray[np.float64], flavor: Flavor
) -> float:
    edge = b - a
    scale = float(np.linalg.norm(edge))
    if scale == 0.0:
        return float(np.linalg.norm(t - a))
    along = float(np.dot(t - a, edge)) / scale**2
    off_line = float(np.linalg.norm(t - a - along * edge))
    perpendicular = abs(float(inner(t, edge, flavor))) / scale
    return max(off_line, perpendicular)


def tangency_residual(kp: KoebePair) -> float:
    """Worst distance of a tangent point from its edge line or foot condition."""
    g = kp.graph
    P = kp.points
    worst = 0.0
    for b, s1, s2 in _same_kind_pairs(g, VertexKind.SPHERE):
        residual = _tangency(kp.sphere_tangent(b), P[s1], P[s2], kp.flavor)
        worst = max(worst, residual)
    for b, c1, c2 in _same_kind_pairs(g, VertexKind.CIRCLE):
        residual = _tangency(kp.circle_tangent(b), P[c1], P[c2], kp.flavor)
        worst = max(worst, residual)
    return worst


def _planarity(points: NDArray[np.float64]) -> float:
    centered = points - points.mean(axis=0)
    singular = np.linalg.svd(centered, compute_uv=False)
    return float(singular[-1] / max(singular[0], 1e-300)) if len(points) > 3 else 0.0


def _cyclic_order(
    axis: NDArray[np.float64], center: NDArray[np.float64], ring: list[NDArray[np.float64]]
) -> float:
    axis = axis / np.linalg.norm(axis)
    vectors = [p - center - np.dot(p - center, axis) * axis for p in ring]
    steps = []
    for u, w in zip(vectors, vectors[1:] + vectors[:1]):
        steps.append(math.atan2(float(np.dot(axis, np.cross(u, w))), float(np.dot(u, w))))
    direction = 1.0 if sum(steps) >= 0 else -1.0
    return max(0.0, -min(direction * s for s in steps))


def verify_koebe(kp: KoebePair) -> dict[str, float]:
    """Worst residual of every Koebe pair invariant."""
    g = kp.graph
    flavor = kp.flavor
    P = kp.points
    result: dict[str, float] = {"tangency": tangency_residual(kp)}

    planarity = 0.0
    for c, spheres in g.faces_of_G.items():
        planarity = max(planarity, _planarity(P[list(spheres)]))
    for s, circles in g.faces_of_G_star.items():
        planarity = max(planarity, _planarity(P[list(circles)]))
    result["planarity"] = planarity

    polarity = 0.0
    i, j = g.white_pairs
    ids = g.white_vertices
    for a, b in zip(i, j):
        value = float(inner(P[ids[a]], P[ids[b]], flavor))
        polarity = max(polarity, abs(value - kp.polarity))
    result["polarity"] = polarity

    duality = 0.0
    for b in g.black_vertices:
        spheres = [w for w in g.neighbors[b] if g.kinds[w] is VertexKind.SPHERE]
        circles = [w for w in g.neighbors[b] if g.kinds[w] is VertexKind.CIRCLE]
        if len(spheres) == 2 and len(circles) == 2:
            e = P[spheres[0]] - P[spheres[1]]
            f = P[circles[0]] - P[circles[1]]
            scale = float(length(e, flavor) * length(f, flavor))
            if scale > 0:
                duality = max(duality, abs(float(inner(e, f, flavor))) / scale)
    result["duality"] = duality

    regularity = 0.0
    for v in g.white_vertices:
        rotation = g.rotation(v)
        if not rotation.closed:
            continue
        sphere = g.kinds[v] is VertexKind.SPHERE
        ring = [
            kp.sphere_tangent(b) if sphere else kp.circle_tangent(b)
            for b in rotation.edge_neighbors
        ]
        regularity = max(regularity, _cyclic_order(lower(P[v], flavor), P[v], ring))
    result["regularity"] = regularity

    lengths = fundamental_piece_lengths(kp.pattern.solution)
    measured_worst = 0.0
    forms_worst = 0.0
    for (w, b), (trig, elliptic) in lengths.items():
        measured = float(length(kp.koebe_point(w) - kp.sphere_tangent(b), flavor))
        measured_worst = max(measured_worst, abs(measured - abs(elliptic)))
        forms_worst = max(forms_worst, abs(trig - elliptic) / max(1.0, abs(elliptic)))
    result["edge lengths"] = measured_worst
    result["edge length forms"] = forms_worst
    return result
