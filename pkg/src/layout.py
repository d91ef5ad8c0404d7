"""
Geometric realization of ring patterns.

Ring centers are placed on the unit sphere (spherical flavor) or on the
hyperboloid (hyperbolic flavor), touching points at black vertices. Placement
propagates outward from a seed ring using exact right-triangle angles, and a
sparse least-squares polish removes accumulated drift.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from loguru import logger
from numpy.typing import NDArray
from scipy import optimize, sparse

from .core.exceptions import LayoutInconsistency
from .elliptic import Modulus, jacobi
from .geometry import (
    NORTH,
    Flavor,
    chord_squared,
    exp_map,
    inner,
    length,
    oriented_angle,
    project_to_model,
    rotate_tangent,
    tangent_direction,
)
from .quadgraph import EdgeColor, SQuadGraph, VertexKind
from .ringpattern import PatternSolution

_POLISH_THRESHOLD = 1e-12
_DEGENERATE = 1e-9


def ring_radii(
    x: Any, mod: Modulus, flavor: Flavor
) -> tuple[Any, Any]:
    """Signed inner radius r and outer radius R for variables x."""
    sn, cn, dn = jacobi(x, mod)
    if flavor is Flavor.SPHERICAL:
        return np.arctan2(cn, sn), np.arctan2(dn, mod.q * sn)
    return np.arcsinh(cn / sn), np.arctanh(np.minimum(dn, 1.0 - 1e-16))


def radii_from_vars(sol: PatternSolution) -> dict[int, tuple[float, float]]:
    """(r, R) for every white vertex; r < 0 marks negatively oriented rings."""
    mod = sol.modulus
    span = _DEGENERATE * (mod.K if math.isfinite(mod.K) else 1.0)
    r, R = ring_radii(sol.values, mod, sol.flavor)
    result = {}
    for v, x, ri, Ri in zip(sol.graph.white_vertices, sol.values, r, R):
        if x <= span or x >= 2.0 * mod.K - span:
            logger.warning(f"Ring at vertex {v} is degenerate (variable {x:.3e})")
        result[v] = (float(ri), float(Ri))
    return result


def neighbor_distance(
    rv: tuple[float, float], rw: tuple[float, float], flavor: Flavor
) -> float:
    """
    Distance between the centers of two orthogonally intersecting rings.

    The inner circle of one ring meets the outer circle of the other at a
    right angle, so both orderings of the Pythagorean relation must agree.
    """
    (r1, R1), (r2, R2) = rv, rw
    if flavor is Flavor.SPHERICAL:
        first, second = math.cos(R1) * math.cos(r2), math.cos(r1) * math.cos(R2)
        if abs(first - second) > 1e-9:
            raise LayoutInconsistency(
                f"Rings are not orthogonal: {first:.12g} != {second:.12g}",
                residual=abs(first - second),
            )
        return math.acos(max(-1.0, min(1.0, first)))
    first, second = math.cosh(R1) * math.cosh(r2), math.cosh(r1) * math.cosh(R2)
    if abs(first - second) > 1e-9 * max(1.0, first):
        raise LayoutInconsistency(
            f"Rings are not orthogonal: {first:.12g} != {second:.12g}",
            residual=abs(first - second),
        )
    return math.acosh(max(1.0, first))


def kite_angles(
    x: float, y: float, mod: Modulus, flavor: Flavor
) -> tuple[float, float]:
    """
    Angles at the center of ring x between the neighbour y and the two
    touching points of their quad.

    Returns (inner, outer): the touching point on the inner circle of x,
    then the one on its outer circle.
    """
    sn, cn, dn = jacobi(x, mod)
    sn2, cn2, dn2 = jacobi(y, mod)
    q = mod.q
    if flavor is Flavor.SPHERICAL:
        return math.atan2(dn2, q * sn2 * cn), math.atan2(cn2, sn2 * dn)
    return math.atan2(dn2 * sn, cn), math.atan2(q * sn * cn2, dn)


@dataclass
class EmbeddedRingPattern:
    """Ring centers (white vertices) and touching points (black vertices)."""

    flavor: Flavor
    solution: PatternSolution
    points: NDArray[np.float64]
    radii: dict[int, tuple[float, float]]
    distances: dict[tuple[int, int], float] = field(default_factory=dict)
    residual: float = float("nan")

    @property
    def graph(self) -> SQuadGraph:
        return self.solution.graph

    @property
    def centers(self) -> dict[int, NDArray[np.float64]]:
        return {v: self.points[v] for v in self.graph.white_vertices}

    @property
    def touch_points(self) -> dict[int, NDArray[np.float64]]:
        return {b: self.points[b] for b in self.graph.black_vertices}

    def edge_radius(self, w: int, b: int) -> float:
        """Signed radius of the circle of ring w passing through b."""
        r, R = self.radii[w]
        return r if self.graph.color(w, b) is EdgeColor.HORIZONTAL else R


def _angular_positions(
    g: SQuadGraph, v: int, values: dict[int, float], mod: Modulus, flavor: Flavor
) -> dict[int, float]:
    """Counterclockwise angle of every rotation element of v, the first at 0."""
    sequence = g.rotation(v).sequence
    positions = {sequence[0]: 0.0}
    angle = 0.0
    for previous, current in zip(sequence, sequence[1:]):
        w, b = (current, previous) if g.kinds[current].is_white else (previous, current)
        inner_angle, outer_angle = kite_angles(values[v], values[w], mod, flavor)
        angle += inner_angle if g.color(v, b) is EdgeColor.HORIZONTAL else outer_angle
        positions[current] = angle
    return positions


def _s_edges(g: SQuadGraph) -> tuple[NDArray[np.int64], NDArray[np.int64]]:
    whites, blacks = [], []
    for u, v in g.edges:
        w, b = (u, v) if g.kinds[u].is_white else (v, u)
        whites.append(w)
        blacks.append(b)
    return np.array(whites, dtype=np.int64), np.array(blacks, dtype=np.int64)


def _white_pairs(g: SQuadGraph) -> tuple[NDArray[np.int64], NDArray[np.int64]]:
    i, j = g.white_pairs
    ids = np.array(g.white_vertices, dtype=np.int64)
    return ids[i], ids[j]


class _Polisher:
    """Sparse least squares over all points with squared-chord residuals."""

    def __init__(self, pat: EmbeddedRingPattern, seed: int, first: int):
        g = pat.graph
        flavor = pat.flavor
        self.sig = flavor.signature
        self.norm = flavor.model_norm
        self.n = g.n_vertices
        self.ew, self.eb = _s_edges(g)
        self.et = chord_squared(
            [pat.edge_radius(int(w), int(b)) for w, b in zip(self.ew, self.eb)], flavor
        )
        self.pa, self.pb = _white_pairs(g)
        self.pt = chord_squared(
            [pat.distances[(int(a), int(b))] for a, b in zip(self.pa, self.pb)], flavor
        )
        self.seed = seed
        self.first = first

    def residuals(self, X: NDArray[np.float64]) -> NDArray[np.float64]:
        P = X.reshape(-1, 3)
        d1 = P[self.ew] - P[self.eb]
        d2 = P[self.pa] - P[self.pb]
        return np.concatenate(
            [
                np.sum(d1 * self.sig * d1, axis=1) - self.et,
                np.sum(d2 * self.sig * d2, axis=1) - self.pt,
                np.sum(P * self.sig * P, axis=1) - self.norm,
                P[self.seed] - NORTH,
                [P[self.first, 1]],
            ]
        )

    def jacobian(self, X: NDArray[np.float64]) -> sparse.csr_matrix:
        P = X.reshape(-1, 3)
        rows: list[NDArray[np.int64]] = []
        cols: list[NDArray[np.int64]] = []
        data: list[NDArray[np.float64]] = []
        offset = 0

        def pair_block(a: NDArray[np.int64], b: NDArray[np.int64]) -> None:
            nonlocal offset
            grad = 2.0 * (P[a] - P[b]) * self.sig
            r = np.repeat(np.arange(offset, offset + len(a)), 3)
            for index, sign in ((a, 1.0), (b, -1.0)):
                rows.append(r)
                cols.append((3 * index[:, None] + np.arange(3)).ravel())
                data.append(sign * grad.ravel())
            offset += len(a)

        pair_block(self.ew, self.eb)
        pair_block(self.pa, self.pb)

        rows.append(np.repeat(np.arange(offset, offset + self.n), 3))
        cols.append(np.arange(3 * self.n))
        data.append((2.0 * P * self.sig).ravel())
        offset += self.n

        rows.append(np.arange(offset, offset + 3))
        cols.append(3 * self.seed + np.arange(3))
        data.append(np.ones(3))
        offset += 3

        rows.append(np.array([offset]))
        cols.append(np.array([3 * self.first + 1]))
        data.append(np.ones(1))
        offset += 1

        return sparse.coo_matrix(
            (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
            shape=(offset, 3 * self.n),
        ).tocsr()


def _propagate(
    sol: PatternSolution,
    radii: dict[int, tuple[float, float]],
    distances: dict[tuple[int, int], float],
    seed: int,
) -> tuple[NDArray[np.float64], int]:
    g = sol.graph
    flavor = sol.flavor
    mod = sol.modulus
    values = sol.as_mapping()
    points = np.full((g.n_vertices, 3), np.nan)
    points[seed] = NORTH
    parent: dict[int, int] = {}
    first = g.rotation(seed).diagonal_neighbors[0]

    queue = deque([seed])
    while queue:
        v = queue.popleft()
        p = points[v]
        positions = _angular_positions(g, v, values, mod, flavor)
        if v == seed:
            reference, base = np.array([1.0, 0.0, 0.0]), positions[first]
        else:
            u = parent[v]
            reference, base = tangent_direction(p, points[u], flavor), positions[u]

        for element, angle in positions.items():
            if not np.isnan(points[element, 0]):
                continue
            direction = rotate_tangent(p, reference, angle - base, flavor)
            if g.kinds[element].is_white:
                rho = distances[(v, element)]
                parent[element] = v
                queue.append(element)
            else:
                r, R = radii[v]
                rho = r if g.color(v, element) is EdgeColor.HORIZONTAL else R
            points[element] = project_to_model(exp_map(p, direction, rho, flavor), flavor)

    if np.isnan(points).any():
        missing = sorted({int(i) for i in np.argwhere(np.isnan(points))[:, 0]})
        raise LayoutInconsistency(
            f"Vertices unreachable from the seed ring: {missing[:8]}", where=missing
        )
    return points, first


def _placement_residual(pat: EmbeddedRingPattern) -> float:
    worst = pattern_residuals(pat)
    return max(worst["incidence"], worst["neighbour distance"], worst["normalization"])


def embed(
    sol: PatternSolution, tolerance: float = 1e-7, polish: bool = True
) -> EmbeddedRingPattern:
    """
    Place ring centers and touching points on the model surface.

    The central white vertex sits at the north pole (or the hyperboloid
    apex) with its first white neighbour along the x1 axis.

    Raises:
        LayoutInconsistency: residuals exceed ``tolerance`` after the polish
    """
    g = sol.graph
    flavor = sol.flavor
    radii = radii_from_vars(sol)
    distances: dict[tuple[int, int], float] = {}
    for a, b in zip(*_white_pairs(g)):
        d = neighbor_distance(radii[int(a)], radii[int(b)], flavor)
        distances[(int(a), int(b))] = d
        distances[(int(b), int(a))] = d

    seed = g.central_white
    points, first = _propagate(sol, radii, distances, seed)
    pattern = EmbeddedRingPattern(flavor, sol, points, radii, distances)
    residual = _placement_residual(pattern)
    logger.debug(f"Propagated layout residual {residual:.3e}")

    if polish and residual > _POLISH_THRESHOLD:
        polisher = _Polisher(pattern, seed, first)
        result = optimize.least_squares(
            polisher.residuals,
            points.ravel(),
            jac=polisher.jacobian,
            method="trf",
            ftol=1e-15,
            xtol=1e-15,
            gtol=1e-15,
            max_nfev=100,
        )
        pattern.points = project_to_model(result.x.reshape(-1, 3), flavor)
        residual = _placement_residual(pattern)
        logger.debug(f"Polished layout residual {residual:.3e} ({result.nfev} evaluations)")

    pattern.residual = residual
    if residual > tolerance:
        raise LayoutInconsistency(
            f"Layout residual {residual:.3e} exceeds tolerance {tolerance:.1e}",
            residual=residual,
        )
    logger.info(f"Embedded {len(g.white_vertices)} rings, residual {residual:.3e}")
    return pattern


def _chord(p: NDArray[np.float64], w: NDArray[np.float64], flavor: Flavor) -> Any:
    return length(p - w, flavor)


def pattern_residuals(pat: EmbeddedRingPattern) -> dict[str, float]:
    """
    Worst residual of every pattern invariant.

    Checks that do not apply (angle sums when a ring is negatively oriented)
    are reported as NaN.
    """
    g = pat.graph
    flavor = pat.flavor
    q = pat.solution.q
    P = pat.points
    result: dict[str, float] = {}

    result["normalization"] = float(
        np.max(np.abs(inner(P, P, flavor) - flavor.model_norm))
    )

    r = np.array([pat.radii[v][0] for v in g.white_vertices])
    R = np.array([pat.radii[v][1] for v in g.white_vertices])
    if flavor is Flavor.SPHERICAL:
        relation = q * np.cos(r) - np.cos(R)
    else:
        relation = (q * np.cosh(R) - np.cosh(r)) / np.cosh(r)
    result["q-relation"] = float(np.max(np.abs(relation)))

    ew, eb = _s_edges(g)
    rho = np.array([pat.edge_radius(int(w), int(b)) for w, b in zip(ew, eb)])
    result["incidence"] = float(
        np.max(np.abs(_chord(P[ew], P[eb], flavor) - np.sqrt(chord_squared(rho, flavor))))
    )

    pa, pb = _white_pairs(g)
    dist = np.array([pat.distances[(int(a), int(b))] for a, b in zip(pa, pb)])
    result["neighbour distance"] = float(
        np.max(np.abs(_chord(P[pa], P[pb], flavor) - np.sqrt(chord_squared(dist, flavor))))
    )

    worst_orthogonal = 0.0
    for quad in g.quads:
        whites = [v for v in quad if g.kinds[v].is_white]
        blacks = [v for v in quad if not g.kinds[v].is_white]
        for b in blacks:
            if min(abs(pat.edge_radius(w, b)) for w in whites) < 1e-6:
                continue
            angle = oriented_angle(P[b], P[whites[0]], P[whites[1]], flavor)
            worst_orthogonal = max(worst_orthogonal, abs(abs(angle) - math.pi / 2))
    result["orthogonality"] = worst_orthogonal

    values = pat.solution.as_mapping()
    all_positive = all(x <= pat.solution.modulus.K for x in values.values())
    angle_sum = 0.0
    orientation = 0.0
    for v in g.white_vertices:
        neighbours = g.rotation(v).diagonal_neighbors
        closed = g.rotation(v).closed
        ring = list(neighbours) + ([neighbours[0]] if closed else [])
        steps = [
            oriented_angle(P[v], P[a], P[b], flavor) for a, b in zip(ring, ring[1:])
        ]
        if values[v] <= pat.solution.modulus.K and steps:
            orientation = max(orientation, max(0.0, -min(steps)))
        if closed and all_positive:
            total = sum(s % (2.0 * math.pi) for s in steps)
            expected = (len(neighbours) - 2) * math.pi
            angle_sum = max(angle_sum, abs(total - expected))
    result["angle sum"] = angle_sum if all_positive else float("nan")
    result["orientation"] = orientation
    return result


def boundary_chain(g: SQuadGraph, side: int) -> list[int]:
    """
    Sphere vertices along one side of a rectangle, counterclockwise.

    Sides are numbered counterclockwise from the bottom side (0).
    """
    corners = g.corners
    if len(corners) != 4 or g.coords is None:
        raise LayoutInconsistency("Side chains need a rectangle with coordinates")
    start, stop = corners[side % 4], corners[(side + 1) % 4]
    spheres = [v for v in g.boundary_whites if g.kinds[v] is VertexKind.SPHERE]
    a = np.array(g.coords[start])
    b = np.array(g.coords[stop])
    axis = (b - a) / np.linalg.norm(b - a)
    normal = np.array([-axis[1], axis[0]])
    on_side = [
        v for v in spheres if abs(float((np.array(g.coords[v]) - a) @ normal)) < 1e-9
    ]
    return sorted(on_side, key=lambda v: float((np.array(g.coords[v]) - a) @ axis))


def side_length(pat: EmbeddedRingPattern, side: int) -> float:
    """Geodesic length of the polygon through the ring centers of a side."""
    chain = boundary_chain(pat.graph, side)
    P = pat.points
    if pat.flavor is Flavor.SPHERICAL:
        steps = [
            math.acos(max(-1.0, min(1.0, float(inner(P[a], P[b], pat.flavor)))))
            for a, b in zip(chain, chain[1:])
        ]
    else:
        steps = [
            math.acosh(max(1.0, -float(inner(P[a], P[b], pat.flavor))))
            for a, b in zip(chain, chain[1:])
        ]
    return float(sum(steps))
