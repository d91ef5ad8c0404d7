"""
Discrete cmc surfaces from two-sphere Koebe nets.

The surface c and its parallel companion c* live on the central extension:
sphere vertices carry vertex-sphere centers, circle vertices face-circle
centers and black vertices touching points. Both are integrated from one-forms
along the Koebe net, with the gauge chosen so that the Gauss map n = c* - c
coincides with the Koebe net itself.
"""

from __future__ import annotations

import math
from collections import deque
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from loguru import logger
from numpy.typing import NDArray

from .core.exceptions import (
    ClosureViolation,
    DegenerateFace,
    NonConvergentFamily,
    NotParallel,
    NotPlanar,
)
from .geometry import Flavor, inner, length, lower
from .koebe import KoebePair, edge_lengths
from .layout import boundary_chain
from .quadgraph import EdgeColor, SQuadGraph, VertexKind
from .ringpattern import PatternSolution

ArrayLikePolygon = Any


def lambda_constant(q: float) -> float:
    """The product d * d* shared by all vertex spheres and face circles."""
    return (1.0 - q * q) / (4.0 * q)


def darboux_constant(q: float, flavor: Flavor) -> float:
    """Value of |c - c*|^2 - (d^2 + d*^2) at every vertex sphere."""
    value = (1.0 + q * q) / (2.0 * q)
    return value if flavor is Flavor.SPHERICAL else -value


def cmc_radii(sol: PatternSolution) -> dict[int, tuple[float, float]]:
    """
    (d, d*) per white vertex: vertex-sphere radii at sphere vertices,
    face-circle radii at circle vertices.

    With (h, v) the signed Koebe edge lengths at the vertex,
    d = (v + h) / 2 and d* = (v - h) / 2.
    """
    g = sol.graph
    result = {}
    for index, w in enumerate(g.white_vertices):
        h, v = edge_lengths(sol.values[index], sol.modulus, sol.flavor, g.kinds[w])
        result[w] = (float(0.5 * (v + h)), float(0.5 * (v - h)))
    return result


@dataclass
class CmcPair:
    """Surface c, its parallel cmc companion c* and their radii."""

    flavor: Flavor
    koebe: KoebePair
    c: NDArray[np.float64]
    c_star: NDArray[np.float64]
    radii: dict[int, tuple[float, float]]
    lam: float
    origin: int
    closure: dict[int, float] = field(default_factory=dict)

    @property
    def graph(self) -> SQuadGraph:
        return self.koebe.graph

    @property
    def gauss(self) -> NDArray[np.float64]:
        """n = c* - c."""
        return self.c_star - self.c

    @property
    def q(self) -> float:
        return self.koebe.q

    def sphere_radii(self) -> dict[int, tuple[float, float]]:
        return {v: self.radii[v] for v in self.graph.sphere_vertices}

    def circle_radii(self) -> dict[int, tuple[float, float]]:
        return {v: self.radii[v] for v in self.graph.circle_vertices}


def _partner(g: SQuadGraph, w: int, b: int) -> int | None:
    kind = g.kinds[w]
    for other in g.neighbors[b]:
        if other != w and g.kinds[other] is kind:
            return other
    return None


def _unit_direction(kp: KoebePair, w: int, b: int) -> NDArray[np.float64]:
    """Direction of the Koebe edge from w toward b when it has zero length."""
    g = kp.graph
    flavor = kp.flavor
    K = kp.central_extension_points()
    if g.kinds[w] is VertexKind.SPHERE:
        other = _partner(g, w, b)
        if other is None:
            raise DegenerateFace(f"No partner sphere vertex at {b}", where=(w, b))
        direction = K[other] - K[w]
    else:
        ends = [s for s in g.neighbors[b] if g.kinds[s] is VertexKind.SPHERE]
        face = g.faces_of_G[w]
        edge = K[ends[1]] - K[ends[0]]
        direction = np.cross(lower(kp.points[w], flavor), edge)
        outward = 0.5 * (K[ends[0]] + K[ends[1]]) - K[list(face)].mean(axis=0)
        if float(np.dot(direction, outward)) < 0:
            direction = -direction
    size = float(length(direction, flavor))
    if size == 0.0:
        raise DegenerateFace(f"Koebe edge direction at {(w, b)} vanishes", where=(w, b))
    return np.asarray(direction / size)


def _increments(
    kp: KoebePair, radii: Mapping[int, tuple[float, float]]
) -> dict[tuple[int, int], tuple[NDArray[np.float64], NDArray[np.float64]]]:
    """(dc, dc*) along every S-edge, oriented from white to black."""
    g = kp.graph
    K = kp.central_extension_points()
    result = {}
    for u, v in g.edges:
        w, b = (u, v) if g.kinds[u].is_white else (v, u)
        d, d_star = radii[w]
        sigma = 1.0 if g.color(w, b) is EdgeColor.VERTICAL else -1.0
        ell = d + sigma * d_star
        dk = K[b] - K[w]
        if abs(ell) > 1e-12 * max(1.0, abs(d)):
            unit = dk / ell
        else:
            unit = _unit_direction(kp, w, b)
        result[(w, b)] = (-d * unit, sigma * d_star * unit)
    return result


def _oriented(
    increments: Mapping[tuple[int, int], Any], g: SQuadGraph, a: int, b: int, part: int
) -> NDArray[np.float64]:
    if g.kinds[a].is_white:
        return np.asarray(increments[(a, b)][part])
    return -np.asarray(increments[(b, a)][part])


def integrate_one_forms(
    kp: KoebePair,
    radii: Mapping[int, tuple[float, float]] | None = None,
    origin: int | None = None,
    tolerance: float = 1e-7,
) -> CmcPair:
    """
    Integrate dc and dc* over a spanning tree of the central extension.

    The gauge puts c(origin) = 0 and c*(origin) = k(origin). Closure is
    checked on every quad of the central extension.

    Raises:
        ClosureViolation: a quad cycle does not close within tolerance
    """
    g = kp.graph
    radii = dict(radii) if radii is not None else cmc_radii(kp.pattern.solution)
    origin = g.central_white if origin is None else origin
    increments = _increments(kp, radii)

    c = np.full((g.n_vertices, 3), np.nan)
    c_star = np.full((g.n_vertices, 3), np.nan)
    c[origin] = 0.0
    c_star[origin] = kp.koebe_point(origin)
    queue = deque([origin])
    while queue:
        a = queue.popleft()
        for b in g.neighbors[a]:
            if not np.isnan(c[b, 0]):
                continue
            c[b] = c[a] + _oriented(increments, g, a, b, 0)
            c_star[b] = c_star[a] + _oriented(increments, g, a, b, 1)
            queue.append(b)

    closure: dict[int, float] = {}
    for index, quad in enumerate(g.quads):
        total = np.zeros(3)
        total_star = np.zeros(3)
        for k in range(4):
            a, b = quad[k], quad[(k + 1) % 4]
            total += _oriented(increments, g, a, b, 0)
            total_star += _oriented(increments, g, a, b, 1)
        closure[index] = float(max(np.linalg.norm(total), np.linalg.norm(total_star)))

    worst_index = max(closure, key=lambda i: closure[i]) if closure else -1
    worst = closure.get(worst_index, 0.0)
    if worst > tolerance:
        raise ClosureViolation(
            f"One-forms do not close: residual {worst:.3e} on quad {worst_index}",
            residual=worst,
            where=g.quads[worst_index],
        )

    pair = CmcPair(
        flavor=kp.flavor,
        koebe=kp,
        c=c,
        c_star=c_star,
        radii=radii,
        lam=lambda_constant(kp.q),
        origin=origin,
        closure=closure,
    )
    logger.info(f"Integrated cmc pair from origin {origin}, worst closure {worst:.3e}")
    return pair


def _edge_sign(g: SQuadGraph, w: int, b: int) -> float:
    # horizontal edges keep their orientation in the dual, vertical ones reverse
    return 1.0 if g.color(w, b) is EdgeColor.HORIZONTAL else -1.0


def christoffel_dual(
    g: SQuadGraph,
    centers: NDArray[np.float64],
    radii: Mapping[int, float],
    lam: float,
    tolerance: float = 1e-7,
) -> tuple[NDArray[np.float64], dict[int, float]]:
    """
    Christoffel dual of touching sphere and circle data on the central extension.

    ``centers`` holds centers at white vertices and touching points at black
    ones. Along each edge from white w to black b,
    dc* = eps * lam * dc / d_w^2 with eps = +1 on horizontal and -1 on
    vertical edges; radii invert to lam / d. Between two touching spheres
    this is dc* = eps * lam * dc / (d d'). The dual is integrated from the
    lowest white vertex id, which sits at the origin.

    Raises:
        ClosureViolation: the dual one-form is not exact
    """
    centers = np.asarray(centers, dtype=float)

    def step(w: int, b: int) -> NDArray[np.float64]:
        d = radii[w]
        return np.asarray(_edge_sign(g, w, b) * lam * (centers[b] - centers[w]) / (d * d))

    def oriented(a: int, b: int) -> NDArray[np.float64]:
        return step(a, b) if g.kinds[a].is_white else -step(b, a)

    dual = np.full_like(centers, np.nan)
    root = min(g.white_vertices)
    dual[root] = 0.0
    queue = deque([root])
    while queue:
        a = queue.popleft()
        for b in g.neighbors[a]:
            if np.isnan(dual[b, 0]):
                dual[b] = dual[a] + oriented(a, b)
                queue.append(b)

    scale = max(1.0, float(np.max(np.abs(dual))))
    worst = 0.0
    for u, v in g.edges:
        mismatch = dual[v] - dual[u] - oriented(u, v)
        worst = max(worst, float(np.linalg.norm(mismatch)) / scale)
    if worst > tolerance:
        raise ClosureViolation(
            f"Christoffel dual one-form is not exact: residual {worst:.3e}",
            residual=worst,
        )
    dual_radii = {v: lam / d for v, d in radii.items()}
    return dual, dual_radii


def _plane_frame(
    points: NDArray[np.float64], flavor: Flavor
) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64], float]:
    """Orthonormal basis (in the ambient form) of a polygon's plane."""
    centered = points - points.mean(axis=0)
    _, singular, vt = np.linalg.svd(centered)
    a, b = vt[0], vt[1]
    aa = float(inner(a, a, flavor))
    if aa <= 0.0:
        raise DegenerateFace("Face plane is not spacelike", residual=aa)
    a = a / math.sqrt(aa)
    b = b - float(inner(a, b, flavor)) * a
    bb = float(inner(b, b, flavor))
    if bb <= 0.0:
        raise DegenerateFace("Face plane is not spacelike", residual=bb)
    b = b / math.sqrt(bb)
    planarity = float(singular[-1] / max(singular[0], 1e-300))
    return a, b, vt[2], planarity


def _shoelace(x: NDArray[np.float64], y: NDArray[np.float64]) -> float:
    return float(0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def polygon_area(P: ArrayLikePolygon, flavor: Flavor = Flavor.SPHERICAL) -> float:
    """Signed area of a planar polygon in its own plane."""
    return mixed_area(P, P, flavor)


def mixed_area(
    P: ArrayLikePolygon,
    Q: ArrayLikePolygon,
    flavor: Flavor = Flavor.SPHERICAL,
    planar_tolerance: float = 1e-8,
    parallel_tolerance: float = 1e-6,
) -> float:
    """
    Mixed area A(P, Q) = (A(P + Q) - A(P) - A(Q)) / 2 of edge-parallel polygons.

    Computed in a common orthonormal frame of the plane of P.

    Raises:
        NotPlanar: P or Q is not planar, or their planes are not parallel
        NotParallel: corresponding edges are not parallel
    """
    P = np.asarray(P, dtype=float)
    Q = np.asarray(Q, dtype=float)
    if P.shape != Q.shape:
        raise NotParallel("Polygons have different vertex counts")
    reference = P if np.ptp(P, axis=0).max() > 0 else Q
    a, b, normal, planarity = _plane_frame(reference, flavor)
    if planarity > planar_tolerance:
        raise NotPlanar(f"Polygon is not planar ({planarity:.2e})", residual=planarity)
    for polygon in (P, Q):
        scale = max(float(np.ptp(polygon, axis=0).max()), 1e-300)
        off = float(np.ptp((polygon - polygon.mean(axis=0)) @ normal)) / scale
        if off > planar_tolerance:
            raise NotPlanar(f"Polygon leaves the common plane ({off:.2e})", residual=off)

    px, py = inner(P, a, flavor), inner(P, b, flavor)
    qx, qy = inner(Q, a, flavor), inner(Q, b, flavor)
    ep = np.stack([np.roll(px, -1) - px, np.roll(py, -1) - py], axis=1)
    eq = np.stack([np.roll(qx, -1) - qx, np.roll(qy, -1) - qy], axis=1)
    sizes = np.linalg.norm(ep, axis=1) * np.linalg.norm(eq, axis=1)
    cross = np.abs(ep[:, 0] * eq[:, 1] - ep[:, 1] * eq[:, 0])
    nonzero = sizes > 1e-300
    if np.any(cross[nonzero] / sizes[nonzero] > parallel_tolerance):
        worst = float(np.max(cross[nonzero] / sizes[nonzero]))
        raise NotParallel(f"Edges are not parallel ({worst:.2e})", residual=worst)

    return 0.5 * (_shoelace(px + qx, py + qy) - _shoelace(px, py) - _shoelace(qx, qy))


@dataclass
class CurvatureReport:
    """Mixed-area curvatures per face of G and closure residuals per quad."""

    mean: dict[int, float]
    gauss: dict[int, float]
    closure_residuals: dict[int, float]

    @property
    def mean_curvature_deviation(self) -> float:
        """max |H_f - 1|."""
        return max((abs(h - 1.0) for h in self.mean.values()), default=0.0)

    def to_document(self) -> dict[str, Any]:
        return {
            "mean_curvature_deviation": self.mean_curvature_deviation,
            "worst_closure": max(self.closure_residuals.values(), default=0.0),
            "faces": {
                int(f): {"H": self.mean[f], "K": self.gauss[f]} for f in sorted(self.mean)
            },
        }


def curvatures(pair: CmcPair, area_threshold: float = 1e-14) -> CurvatureReport:
    """
    H_f = -A(c, n) / A(c) and K_f = A(n) / A(c) on every face of G.

    Raises:
        DegenerateFace: the face of c has vanishing area
    """
    g = pair.graph
    n = pair.gauss
    mean: dict[int, float] = {}
    gauss: dict[int, float] = {}
    for face, spheres in g.faces_of_G.items():
        cf = pair.c[list(spheres)]
        nf = n[list(spheres)]
        area = mixed_area(cf, cf, pair.flavor)
        if abs(area) < area_threshold:
            raise DegenerateFace(f"Face {face} has vanishing area", where=face, residual=area)
        mean[face] = -mixed_area(cf, nf, pair.flavor) / area
        gauss[face] = mixed_area(nf, nf, pair.flavor) / area
    return CurvatureReport(mean=mean, gauss=gauss, closure_residuals=dict(pair.closure))


def edge_normal_lengths(pair: CmcPair) -> dict[EdgeColor, NDArray[np.float64]]:
    """Squared lengths <n_b, n_b> of the edge normals, grouped by edge color."""
    g = pair.graph
    n = pair.gauss
    grouped: dict[EdgeColor, list[float]] = {EdgeColor.HORIZONTAL: [], EdgeColor.VERTICAL: []}
    for b in g.black_vertices:
        grouped[g.sphere_edge_color(b)].append(float(inner(n[b], n[b], pair.flavor)))
    return {color: np.array(values) for color, values in grouped.items()}


def darboux_parameters(pair: CmcPair) -> dict[int, float]:
    """|c - c*|^2 - (d^2 + d*^2) per vertex sphere; constant (-2 alpha)."""
    result = {}
    for s in pair.graph.sphere_vertices:
        d, d_star = pair.radii[s]
        offset = pair.c[s] - pair.c_star[s]
        result[s] = float(inner(offset, offset, pair.flavor)) - (d * d + d_star * d_star)
    return result


def lambda_residual(pair: CmcPair) -> float:
    """max |d d* - lambda| over all white vertices."""
    return max(abs(d * ds - pair.lam) for d, ds in pair.radii.values())


def face_normal_residuals(pair: CmcPair) -> float:
    """Worst normalized <m_f, edge> for the face normals m_f = c*_f - c_f."""
    g = pair.graph
    flavor = pair.flavor
    n = pair.gauss
    worst = 0.0
    for face, spheres in g.faces_of_G.items():
        m = n[face]
        m_len = float(length(m, flavor))
        for surface in (pair.c, pair.c_star):
            ring = surface[list(spheres)]
            for e in np.roll(ring, -1, axis=0) - ring:
                size = float(length(e, flavor)) * m_len
                if size > 0:
                    worst = max(worst, abs(float(inner(m, e, flavor))) / size)
    return worst


def _sphere_pairs(g: SQuadGraph) -> list[tuple[int, int, int]]:
    """(sphere, sphere, black) for every pair of spheres touching at a black vertex."""
    pairs = []
    for b in g.black_vertices:
        ends = [w for w in g.neighbors[b] if g.kinds[w] is VertexKind.SPHERE]
        if len(ends) == 2:
            pairs.append((ends[0], ends[1], b))
    return pairs


def touching_residuals(pair: CmcPair) -> float:
    """
    Worst violation of the touching conditions on c and on c*.

    Every touching point lies at distance |d| from the centers around it;
    touching spheres have collinear centers, so their distance is the signed
    radius sum |d + d'|; face circles meet the spheres orthogonally at the
    touching points. Lengths and angles are taken in the ambient form, which
    is Minkowski for the Lorentz flavor.
    """
    g = pair.graph
    flavor = pair.flavor
    worst = 0.0
    for surface, part in ((pair.c, 0), (pair.c_star, 1)):
        for u, v in g.edges:
            w, b = (u, v) if g.kinds[u].is_white else (v, u)
            radius = abs(pair.radii[w][part])
            gap = float(length(surface[b] - surface[w], flavor))
            worst = max(worst, abs(gap - radius) / max(1.0, radius))

        for a, a2, _ in _sphere_pairs(g):
            expected = abs(pair.radii[a][part] + pair.radii[a2][part])
            gap = float(length(surface[a2] - surface[a], flavor))
            worst = max(worst, abs(gap - expected) / max(1.0, expected))

        for b in g.black_vertices:
            spheres = [w for w in g.neighbors[b] if g.kinds[w] is VertexKind.SPHERE]
            circles = [w for w in g.neighbors[b] if g.kinds[w] is VertexKind.CIRCLE]
            for s in spheres:
                normal = surface[b] - surface[s]
                normal_size = float(length(normal, flavor))
                for f in circles:
                    ray = surface[b] - surface[f]
                    size = normal_size * float(length(ray, flavor))
                    if size > 1e-300:
                        worst = max(worst, abs(float(inner(normal, ray, flavor))) / size)
    return worst


def christoffel_residual(pair: CmcPair) -> float:
    """
    Distance between the Christoffel dual of c and the integrated c*.

    The dual is built from c and the primal radii alone, with the constant
    lam = d d* of the pair, and matched to c* at its root vertex.
    """
    g = pair.graph
    radii = {w: pair.radii[w][0] for w in g.white_vertices}
    dual, _ = christoffel_dual(g, pair.c, radii, pair.lam, tolerance=math.inf)
    root = min(g.white_vertices)
    shift = pair.c_star[root] - dual[root]
    scale = max(1.0, float(np.max(np.abs(pair.c_star - pair.c_star[root]))))
    return float(np.max(np.abs(dual + shift - pair.c_star))) / scale


# lam * d d* of the limiting Christoffel pair (c, c* / eps)
LIMIT_LAMBDA = 0.5


@dataclass
class LimitSurface:
    """One family member normalized for q -> 1: c, c*/eps and their radii."""

    epsilon: float
    c: NDArray[np.float64]
    c_star: NDArray[np.float64]
    radii: dict[int, tuple[float, float]]
    lam: float
    christoffel: float


def limit_surface(pair: CmcPair) -> LimitSurface:
    """
    Normalize a cmc pair for the q -> 1 limit.

    With lam = (1 - q^2) / (4q) the primal radii already stay finite, so c is
    kept and the dual is scaled by 1/eps. ``christoffel`` is the relative
    distance of c*/eps from the Christoffel dual of c with the limiting
    constant LIMIT_LAMBDA; it vanishes linearly in eps.

    Raises:
        NonConvergentFamily: the pair sits at q = 1
    """
    eps = 1.0 - pair.q
    if eps <= 0.0:
        raise NonConvergentFamily("A pair at q = 1 has no dual normalization")
    g = pair.graph
    c_star = pair.c_star / eps
    radii = {w: (d, d_star / eps) for w, (d, d_star) in pair.radii.items()}
    primal = {w: d for w, (d, _) in radii.items()}
    dual, _ = christoffel_dual(g, pair.c, primal, LIMIT_LAMBDA, tolerance=math.inf)
    root = min(g.white_vertices)
    offset = c_star - c_star[root]
    scale = max(1.0, float(np.max(np.abs(offset))))
    christoffel = float(np.max(np.abs(dual - dual[root] - offset))) / scale
    return LimitSurface(eps, pair.c.copy(), c_star, radii, pair.lam / eps, christoffel)


@dataclass
class MinimalLimit:
    """Convergence of radii, and optionally of the scaled nets, as q tends to 1."""

    flavor: Flavor
    epsilons: list[float]
    primal_errors: list[float]
    dual_errors: list[float]
    extrapolated: tuple[float, float]
    limit_radii: dict[int, tuple[float, float]]
    surfaces: list[LimitSurface] = field(default_factory=list)
    christoffel_extrapolated: float | None = None

    @property
    def christoffel_errors(self) -> list[float]:
        return [s.christoffel for s in self.surfaces]

    def to_document(self) -> dict[str, Any]:
        document: dict[str, Any] = {
            "flavor": self.flavor.value,
            "epsilons": self.epsilons,
            "primal_errors": self.primal_errors,
            "dual_errors": self.dual_errors,
            "extrapolated": list(self.extrapolated),
        }
        if self.surfaces:
            document["christoffel_errors"] = self.christoffel_errors
            document["christoffel_extrapolated"] = self.christoffel_extrapolated
        return document


def _limit_radii(x: float, flavor: Flavor) -> tuple[float, float]:
    if flavor is Flavor.SPHERICAL:
        return 1.0 / math.sinh(x), 0.5 * math.sinh(x)
    return 1.0 / math.cosh(x), 0.5 * math.cosh(x)


def _extrapolate(epsilons: Sequence[float], errors: Sequence[float]) -> float:
    """Linear extrapolation to eps = 0 from the two smallest eps."""
    e1, e2 = errors[-2], errors[-1]
    x1, x2 = epsilons[-2], epsilons[-1]
    return (e2 * x1 - e1 * x2) / (x1 - x2)


def minimal_limit(
    sols: Sequence[PatternSolution],
    tolerance: float = 1e-4,
    pairs: Sequence[CmcPair] = (),
) -> MinimalLimit:
    """
    Check that d and d*/eps approach their q = 1 limits, eps = 1 - q.

    Spherical: d -> 1/sinh(beta), d*/eps -> sinh(beta)/2. Hyperbolic:
    d -> 1/cosh(gamma), d*/eps -> cosh(gamma)/2. Errors are extrapolated
    linearly to eps = 0 from the two smallest eps. When the cmc pairs of the
    family are given, their normalized nets (c, c*/eps) are built as well
    and must approach a Christoffel pair with constant LIMIT_LAMBDA.

    Raises:
        NonConvergentFamily: an extrapolated error exceeds tolerance, or the
            family is inconsistent
    """
    if len(sols) < 2:
        raise NonConvergentFamily("A q -> 1 family needs at least two solutions")
    flavors = {s.flavor for s in sols} | {p.flavor for p in pairs}
    if len(flavors) != 1:
        raise NonConvergentFamily("Family mixes spherical and hyperbolic solutions")
    flavor = sols[0].flavor

    ordered = sorted(sols, key=lambda s: 1.0 - s.q, reverse=True)
    epsilons, primal, dual = [], [], []
    limit_radii: dict[int, tuple[float, float]] = {}
    for sol in ordered:
        eps = 1.0 - sol.q
        radii = cmc_radii(sol)
        worst_primal = worst_dual = 0.0
        for s in sol.graph.sphere_vertices:
            x = sol.var(s)
            d_limit, dual_limit = _limit_radii(x, flavor)
            d, d_star = radii[s]
            worst_primal = max(worst_primal, abs(d - d_limit))
            worst_dual = max(worst_dual, abs(d_star / eps - dual_limit))
            limit_radii[s] = (d, d_star / eps)
        epsilons.append(eps)
        primal.append(worst_primal)
        dual.append(worst_dual)
        logger.debug(f"eps={eps:.1e}: primal {worst_primal:.3e}, dual {worst_dual:.3e}")

    extrapolated = (_extrapolate(epsilons, primal), _extrapolate(epsilons, dual))
    if max(abs(v) for v in extrapolated) > tolerance:
        raise NonConvergentFamily(
            f"Radii do not approach their limits: extrapolated errors {extrapolated}",
            residual=max(abs(v) for v in extrapolated),
        )
    limit = MinimalLimit(flavor, epsilons, primal, dual, extrapolated, limit_radii)
    if not pairs:
        return limit

    surfaces = sorted((limit_surface(p) for p in pairs), key=lambda s: s.epsilon, reverse=True)
    if len(surfaces) != len(epsilons) or any(
        abs(s.epsilon - eps) > 1e-12 for s, eps in zip(surfaces, epsilons)
    ):
        raise NonConvergentFamily("Cmc pairs do not match the solutions of the family")
    limit.surfaces = surfaces
    limit.christoffel_extrapolated = _extrapolate(epsilons, limit.christoffel_errors)
    for s in surfaces:
        logger.debug(f"eps={s.epsilon:.1e}: christoffel {s.christoffel:.3e}")
    if abs(limit.christoffel_extrapolated) > tolerance:
        raise NonConvergentFamily(
            "Scaled nets do not approach a Christoffel pair: extrapolated error "
            f"{limit.christoffel_extrapolated:.3e}",
            residual=abs(limit.christoffel_extrapolated),
        )
    return limit


@dataclass(frozen=True)
class ReflectionPlane:
    """Plane <x - point, normal> = 0 in the ambient form."""

    point: NDArray[np.float64]
    normal: NDArray[np.float64]
    residual: float

    def reflect(self, points: NDArray[np.float64], flavor: Flavor) -> NDArray[np.float64]:
        offsets = inner(points - self.point, self.normal, flavor)
        scale = float(inner(self.normal, self.normal, flavor))
        return np.asarray(points - (2.0 * offsets / scale)[..., None] * self.normal)


def reflection_planes(pair: CmcPair) -> list[ReflectionPlane]:
    """Best-fit planes through the vertex-sphere centers of each rectangle side."""
    planes = []
    for side in range(4):
        chain = boundary_chain(pair.graph, side)
        pts = pair.c[chain]
        point = pts.mean(axis=0)
        _, singular, vt = np.linalg.svd(pts - point)
        euclidean_normal = vt[-1]
        residual = float(np.max(np.abs((pts - point) @ euclidean_normal)))
        normal = lower(euclidean_normal, pair.flavor)
        if abs(float(inner(normal, normal, pair.flavor))) < 1e-12:
            raise DegenerateFace(f"Reflection plane of side {side} is lightlike", where=side)
        planes.append(ReflectionPlane(point, normal, residual))
    return planes


def replicate_by_reflection(
    pair: CmcPair, count: int
) -> list[tuple[NDArray[np.float64], NDArray[np.float64]]]:
    """
    Copies of (c, c*) obtained by reflecting repeatedly across the side
    planes, cycling through the sides counterclockwise.
    """
    planes = reflection_planes(pair)
    copies = [(pair.c.copy(), pair.c_star.copy())]
    for i in range(count):
        plane = planes[i % 4]
        c, c_star = copies[-1]
        copies.append((plane.reflect(c, pair.flavor), plane.reflect(c_star, pair.flavor)))
    return copies
