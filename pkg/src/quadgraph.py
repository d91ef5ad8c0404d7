"""
Combinatorics of S-quad graphs.

An S-quad graph is a bipartite quad complex whose white vertices carry a
label, sphere (``s``) or circle (``c``), with one of each per quad. It is the
central extension of a quad graph G: vertices of G become sphere vertices,
faces become circle vertices and edges become black vertices. Vertices are
stable integer ids; geometry lives in other modules keyed by id.
"""

from __future__ import annotations

import math
from collections import defaultdict, deque
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Any

import numpy as np
from numpy.typing import NDArray

from .core.exceptions import DomainError, GraphValidationError

Quad = tuple[int, int, int, int]
Edge = tuple[int, int]

SCHEMA_VERSION = 1


class VertexKind(str, Enum):
    """Vertex labels of an S-quad graph."""

    SPHERE = "s"
    CIRCLE = "c"
    BLACK = "b"

    @property
    def is_white(self) -> bool:
        return self is not VertexKind.BLACK


class EdgeColor(str, Enum):
    """Edge labels; horizontal S-edges end on the inner circle of a ring."""

    HORIZONTAL = "h"
    VERTICAL = "v"

    def flipped(self) -> EdgeColor:
        return EdgeColor.VERTICAL if self is EdgeColor.HORIZONTAL else EdgeColor.HORIZONTAL


def edge_key(u: int, v: int) -> Edge:
    """Undirected edge key."""
    return (u, v) if u < v else (v, u)


def _quad_edges(quad: Quad) -> list[Edge]:
    return [edge_key(quad[i], quad[(i + 1) % 4]) for i in range(4)]


@dataclass(frozen=True)
class Rotation:
    """
    Counterclockwise neighbourhood of a vertex.

    ``sequence`` alternates edge neighbours (even positions) with diagonal
    neighbours across a quad (odd positions). Closed rotations belong to
    interior vertices and have even length; open ones start and end with an
    edge neighbour.
    """

    sequence: tuple[int, ...]
    closed: bool

    @property
    def edge_neighbors(self) -> tuple[int, ...]:
        return self.sequence[0::2]

    @property
    def diagonal_neighbors(self) -> tuple[int, ...]:
        return self.sequence[1::2]


@dataclass(frozen=True, eq=False)
class QuadGraph:
    """Quad graph G with bicoloured edges."""

    n_vertices: int
    faces: tuple[tuple[int, ...], ...]
    edge_colors: Mapping[Edge, EdgeColor]
    coords: tuple[tuple[float, float], ...] | None = None
    rectangle: tuple[int, int] | None = None

    @cached_property
    def edges(self) -> tuple[Edge, ...]:
        keys = set()
        for face in self.faces:
            n = len(face)
            keys.update(edge_key(face[i], face[(i + 1) % n]) for i in range(n))
        return tuple(sorted(keys))

    def degree(self, v: int) -> int:
        return sum(1 for u, w in self.edges if v in (u, w))


@dataclass(frozen=True, eq=False)
class SQuadGraph:
    """
    S-quad graph.

    Quads are stored counterclockwise; each alternates white and black
    vertices. ``edge_colors`` maps every S-edge to its color.
    """

    kinds: tuple[VertexKind, ...]
    quads: tuple[Quad, ...]
    edge_colors: Mapping[Edge, EdgeColor]
    coords: tuple[tuple[float, float], ...] | None = None
    rectangle: tuple[int, int] | None = None
    _rotations: dict[int, Rotation] = field(
        default_factory=dict, init=False, repr=False, compare=False
    )

    @property
    def n_vertices(self) -> int:
        return len(self.kinds)

    @cached_property
    def edges(self) -> tuple[Edge, ...]:
        keys: set[Edge] = set()
        for quad in self.quads:
            keys.update(_quad_edges(quad))
        return tuple(sorted(keys))

    @cached_property
    def quads_by_edge(self) -> dict[Edge, list[int]]:
        incidence: dict[Edge, list[int]] = defaultdict(list)
        for index, quad in enumerate(self.quads):
            for edge in _quad_edges(quad):
                incidence[edge].append(index)
        return dict(incidence)

    @cached_property
    def quads_by_vertex(self) -> dict[int, list[int]]:
        incidence: dict[int, list[int]] = defaultdict(list)
        for index, quad in enumerate(self.quads):
            for v in quad:
                incidence[v].append(index)
        return dict(incidence)

    @cached_property
    def neighbors(self) -> dict[int, tuple[int, ...]]:
        adjacency: dict[int, set[int]] = defaultdict(set)
        for u, v in self.edges:
            adjacency[u].add(v)
            adjacency[v].add(u)
        return {v: tuple(sorted(adjacency[v])) for v in range(self.n_vertices)}

    @cached_property
    def boundary_edges(self) -> frozenset[Edge]:
        return frozenset(e for e, qs in self.quads_by_edge.items() if len(qs) == 1)

    @cached_property
    def boundary_vertices(self) -> frozenset[int]:
        return frozenset(v for e in self.boundary_edges for v in e)

    def is_boundary(self, v: int) -> bool:
        return v in self.boundary_vertices

    def degree(self, v: int) -> int:
        return len(self.neighbors.get(v, ()))

    def kind(self, v: int) -> VertexKind:
        return self.kinds[v]

    def color(self, u: int, v: int) -> EdgeColor:
        return self.edge_colors[edge_key(u, v)]

    @cached_property
    def white_vertices(self) -> tuple[int, ...]:
        return tuple(v for v, k in enumerate(self.kinds) if k.is_white)

    @cached_property
    def black_vertices(self) -> tuple[int, ...]:
        return tuple(v for v, k in enumerate(self.kinds) if k is VertexKind.BLACK)

    @cached_property
    def sphere_vertices(self) -> tuple[int, ...]:
        return tuple(v for v, k in enumerate(self.kinds) if k is VertexKind.SPHERE)

    @cached_property
    def circle_vertices(self) -> tuple[int, ...]:
        return tuple(v for v, k in enumerate(self.kinds) if k is VertexKind.CIRCLE)

    @cached_property
    def white_index(self) -> dict[int, int]:
        """Position of each white vertex in solver arrays."""
        return {v: i for i, v in enumerate(self.white_vertices)}

    @cached_property
    def interior_whites(self) -> tuple[int, ...]:
        return tuple(v for v in self.white_vertices if not self.is_boundary(v))

    @cached_property
    def boundary_whites(self) -> tuple[int, ...]:
        return tuple(v for v in self.white_vertices if self.is_boundary(v))

    @cached_property
    def white_pairs(self) -> tuple[NDArray[np.int64], NDArray[np.int64]]:
        """Solver indices of the two white vertices of every quad."""
        index = self.white_index
        first, second = [], []
        for quad in self.quads:
            whites = [v for v in quad if self.kinds[v].is_white]
            if len(whites) != 2:
                raise GraphValidationError(
                    f"Quad {quad} does not have two white vertices",
                    violations=["bipartite"],
                )
            first.append(index[whites[0]])
            second.append(index[whites[1]])
        return np.array(first, dtype=np.int64), np.array(second, dtype=np.int64)

    def rotation(self, v: int) -> Rotation:
        """Counterclockwise neighbour sequence of v."""
        cached = self._rotations.get(v)
        if cached is not None:
            return cached

        succ: dict[int, tuple[int, int]] = {}
        for index in self.quads_by_vertex.get(v, []):
            quad = self.quads[index]
            i = quad.index(v)
            succ[quad[(i + 1) % 4]] = (quad[(i + 2) % 4], quad[(i + 3) % 4])

        predecessors = {nxt for _, nxt in succ.values()}
        starts = sorted(x for x in succ if x not in predecessors)
        start = starts[0] if starts else min(succ, default=-1)

        sequence: list[int] = [] if start < 0 else [start]
        closed = False
        current = start
        for _ in range(len(succ)):
            if current not in succ:
                break
            diagonal, current = succ[current]
            sequence.extend((diagonal, current))
            if current == start:
                closed = True
                sequence.pop()
                break

        rotation = Rotation(tuple(sequence), closed)
        self._rotations[v] = rotation
        return rotation

    def sphere_edge_color(self, b: int) -> EdgeColor:
        """Color of the S-edges joining black vertex b to its sphere vertices."""
        for w in self.neighbors[b]:
            if self.kinds[w] is VertexKind.SPHERE:
                return self.color(w, b)
        for w in self.neighbors[b]:
            return self.color(w, b).flipped()
        raise GraphValidationError(f"Black vertex {b} is isolated")

    @cached_property
    def faces_of_G(self) -> dict[int, tuple[int, ...]]:
        """Sphere vertices around each circle vertex, counterclockwise."""
        return {c: self.rotation(c).diagonal_neighbors for c in self.circle_vertices}

    @cached_property
    def faces_of_G_star(self) -> dict[int, tuple[int, ...]]:
        """Circle vertices around each interior sphere vertex, counterclockwise."""
        return {
            s: self.rotation(s).diagonal_neighbors
            for s in self.sphere_vertices
            if self.rotation(s).closed
        }

    @cached_property
    def g_edges(self) -> tuple[tuple[int, int, int, EdgeColor], ...]:
        """Edges of G as (black, sphere, sphere, color)."""
        result = []
        for b in self.black_vertices:
            spheres = [w for w in self.neighbors[b] if self.kinds[w] is VertexKind.SPHERE]
            if len(spheres) == 2:
                result.append((b, spheres[0], spheres[1], self.color(spheres[0], b)))
        return tuple(result)

    @cached_property
    def corners(self) -> tuple[int, ...]:
        """
        Boundary white vertices with a single white neighbour.

        With coordinates they are ordered counterclockwise starting at the
        bottom-left corner.
        """
        found = [v for v in self.boundary_whites if len(white_neighbors(self, v)) == 1]
        if self.coords is None or not found:
            return tuple(found)
        pts = np.array([self.coords[v] for v in found], dtype=float)
        center = pts.mean(axis=0)
        angles = np.arctan2(pts[:, 1] - center[1], pts[:, 0] - center[0])
        return tuple(found[i] for i in np.argsort(angles, kind="stable"))

    @cached_property
    def central_white(self) -> int:
        """White vertex closest to the combinatorial center."""
        whites = self.interior_whites or self.white_vertices
        if self.coords is None:
            return whites[0]
        pts = np.array(self.coords, dtype=float)
        center = pts.mean(axis=0)
        distances = [float(np.hypot(*(pts[v] - center))) for v in whites]
        return whites[int(np.argmin(distances))]

    def to_document(self) -> dict[str, Any]:
        """Serializable description (YAML schema version 1)."""
        vertices = []
        for v, kind in enumerate(self.kinds):
            entry: dict[str, Any] = {"id": v, "kind": kind.value}
            if self.coords is not None:
                entry["coords"] = [float(c) for c in self.coords[v]]
            vertices.append(entry)
        return {
            "schema_version": SCHEMA_VERSION,
            "rectangle": list(self.rectangle) if self.rectangle else None,
            "vertices": vertices,
            "quads": [list(q) for q in self.quads],
            "edges": [
                {"u": u, "v": v, "color": self.edge_colors[(u, v)].value}
                for u, v in self.edges
            ],
        }

    @classmethod
    def from_document(cls, document: Mapping[str, Any]) -> SQuadGraph:
        """Inverse of ``to_document``."""
        version = document.get("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise GraphValidationError(f"Unsupported graph schema version {version}")
        try:
            vertices = sorted(document["vertices"], key=lambda e: int(e["id"]))
            kinds = tuple(VertexKind(e["kind"]) for e in vertices)
            coords = None
            if vertices and all("coords" in e for e in vertices):
                coords = tuple(
                    (float(e["coords"][0]), float(e["coords"][1])) for e in vertices
                )
            quads = tuple(tuple(int(x) for x in q) for q in document["quads"])
            colors = {
                edge_key(int(e["u"]), int(e["v"])): EdgeColor(e["color"])
                for e in document["edges"]
            }
        except (KeyError, TypeError, ValueError) as e:
            raise GraphValidationError(f"Malformed graph document: {e}") from e
        rectangle = document.get("rectangle")
        return cls(
            kinds=kinds,
            quads=quads,  # type: ignore[arg-type]
            edge_colors=colors,
            coords=coords,
            rectangle=tuple(rectangle) if rectangle else None,  # type: ignore[arg-type]
        )


def white_neighbors(g: SQuadGraph, v: int) -> tuple[int, ...]:
    """White vertices sharing a quad with v, counterclockwise around v."""
    if not g.kinds[v].is_white:
        raise DomainError(f"Vertex {v} is not white", parameter="v", value=v)
    return g.rotation(v).diagonal_neighbors


def central_extension(G: QuadGraph) -> SQuadGraph:
    """
    S-quad graph of a quad graph G.

    One circle vertex per face, one black vertex per edge; the vertices of G
    keep their ids and become sphere vertices.
    """
    for face in G.faces:
        if len(face) != 4:
            raise GraphValidationError(
                f"Central extension needs quadrilateral faces, got {face}",
                violations=["non-quadrilateral face"],
            )
    missing = [e for e in G.edges if e not in G.edge_colors]
    if missing:
        raise GraphValidationError(
            f"Edges without color: {missing[:5]}", violations=["edge color missing"]
        )

    n = G.n_vertices
    face_ids = {f: n + f for f in range(len(G.faces))}
    black_ids = {e: n + len(G.faces) + i for i, e in enumerate(G.edges)}

    kinds = (
        [VertexKind.SPHERE] * n
        + [VertexKind.CIRCLE] * len(G.faces)
        + [VertexKind.BLACK] * len(G.edges)
    )
    quads: list[Quad] = []
    colors: dict[Edge, EdgeColor] = {}
    for f, face in enumerate(G.faces):
        c = face_ids[f]
        for i in range(4):
            v, nxt, prv = face[i], face[(i + 1) % 4], face[i - 1]
            e_next = black_ids[edge_key(v, nxt)]
            e_prev = black_ids[edge_key(prv, v)]
            quads.append((v, e_next, c, e_prev))
        for i in range(4):
            e = edge_key(face[i], face[(i + 1) % 4])
            color = G.edge_colors[e]
            b = black_ids[e]
            colors[edge_key(e[0], b)] = color
            colors[edge_key(e[1], b)] = color
            colors[edge_key(c, b)] = color.flipped()

    coords = None
    if G.coords is not None:
        pts: list[tuple[float, float]] = list(G.coords)
        for face in G.faces:
            xs = [G.coords[v][0] for v in face]
            ys = [G.coords[v][1] for v in face]
            pts.append((sum(xs) / 4.0, sum(ys) / 4.0))
        for u, v in G.edges:
            pts.append(
                (
                    0.5 * (G.coords[u][0] + G.coords[v][0]),
                    0.5 * (G.coords[u][1] + G.coords[v][1]),
                )
            )
        coords = tuple(pts)

    return SQuadGraph(
        kinds=tuple(kinds),
        quads=tuple(quads),
        edge_colors=colors,
        coords=coords,
        rectangle=G.rectangle,
    )


def restrict_to_G(S: SQuadGraph) -> QuadGraph:
    """The quad graph G whose central extension is S."""
    renumber = {s: i for i, s in enumerate(S.sphere_vertices)}
    faces = tuple(
        tuple(renumber[s] for s in S.faces_of_G[c]) for c in S.circle_vertices
    )
    colors = {
        edge_key(renumber[s1], renumber[s2]): color for _, s1, s2, color in S.g_edges
    }
    coords = None
    if S.coords is not None:
        coords = tuple(S.coords[s] for s in S.sphere_vertices)
    return QuadGraph(
        n_vertices=len(renumber),
        faces=faces,
        edge_colors=colors,
        coords=coords,
        rectangle=S.rectangle,
    )


def grid_quad_graph(I: int, J: int) -> QuadGraph:
    """I x J vertex grid; edges along the first axis are horizontal."""
    if I < 2 or J < 2:
        raise DomainError(
            f"Rectangle needs I, J >= 2, got ({I}, {J})", parameter="I,J", value=(I, J)
        )

    def vid(i: int, j: int) -> int:
        return j * I + i

    faces = tuple(
        (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1))
        for j in range(J - 1)
        for i in range(I - 1)
    )
    colors: dict[Edge, EdgeColor] = {}
    for j in range(J):
        for i in range(I):
            if i + 1 < I:
                colors[edge_key(vid(i, j), vid(i + 1, j))] = EdgeColor.HORIZONTAL
            if j + 1 < J:
                colors[edge_key(vid(i, j), vid(i, j + 1))] = EdgeColor.VERTICAL
    coords = tuple((2.0 * i, 2.0 * j) for j in range(J) for i in range(I))
    return QuadGraph(
        n_vertices=I * J, faces=faces, edge_colors=colors, coords=coords, rectangle=(I, J)
    )


def build_rectangle(I: int, J: int) -> SQuadGraph:
    """S-quad graph of the I x J combinatorial rectangle."""
    return central_extension(grid_quad_graph(I, J))


def umbilic_quad_graph(size: int = 2, sectors: int = 3) -> QuadGraph:
    """
    Quad graph with one interior vertex of degree ``2 * sectors``.

    Half-plane sectors of ``2 * size`` by ``size`` quads are glued
    cyclically along their boundary rays around the common origin.
    """
    if size < 1 or sectors < 2:
        raise DomainError(
            "Umbilic graph needs size >= 1 and sectors >= 2",
            parameter="size,sectors",
            value=(size, sectors),
        )

    ids: dict[tuple[int, ...], int] = {}
    coords: list[tuple[float, float]] = []

    def canonical(k: int, i: int, j: int) -> tuple[int, ...]:
        if i == 0 and j == 0:
            return (-1,)
        if j == 0 and i < 0:
            return ((k - 1) % sectors, -i, 0)
        return (k, i, j)

    def vid(k: int, i: int, j: int) -> int:
        key = canonical(k, i, j)
        if key not in ids:
            ids[key] = len(ids)
            kk, ii, jj = (k, i, j) if len(key) == 1 else key
            local = math.atan2(jj, ii) if (ii or jj) else 0.0
            angle = 2.0 * math.pi * (kk + local / math.pi) / sectors
            radius = 2.0 * math.hypot(ii, jj)
            coords.append((radius * math.cos(angle), radius * math.sin(angle)))
        return ids[key]

    vid(0, 0, 0)
    faces: list[tuple[int, ...]] = []
    colors: dict[Edge, EdgeColor] = {}
    for k in range(sectors):
        for j in range(size):
            for i in range(-size, size):
                a, b = vid(k, i, j), vid(k, i + 1, j)
                c, d = vid(k, i + 1, j + 1), vid(k, i, j + 1)
                faces.append((a, b, c, d))
                colors[edge_key(a, b)] = EdgeColor.HORIZONTAL
                colors[edge_key(d, c)] = EdgeColor.HORIZONTAL
                colors[edge_key(a, d)] = EdgeColor.VERTICAL
                colors[edge_key(b, c)] = EdgeColor.VERTICAL

    return QuadGraph(
        n_vertices=len(ids), faces=tuple(faces), edge_colors=colors, coords=tuple(coords)
    )


def _connected(g: SQuadGraph) -> bool:
    if g.n_vertices == 0:
        return True
    seen = {0}
    queue = deque([0])
    while queue:
        v = queue.popleft()
        for w in g.neighbors.get(v, ()):
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return len(seen) == g.n_vertices


def validate(g: SQuadGraph) -> list[str]:
    """
    Check every S-quad graph invariant.

    Returns:
        Violation messages prefixed by their category; empty when valid
    """
    violations: list[str] = []

    directed: set[Edge] = set()
    for index, quad in enumerate(g.quads):
        if len(set(quad)) != 4:
            violations.append(f"quad shape: quad {index} repeats a vertex")
            continue
        kinds = [g.kinds[v] for v in quad]
        whites = [k.is_white for k in kinds]
        if whites not in ([True, False, True, False], [False, True, False, True]):
            violations.append(f"bipartite: quad {index} does not alternate colors")
            continue
        labels = sorted(k.value for k in kinds if k.is_white)
        if labels != ["c", "s"]:
            violations.append(f"labeling: quad {index} has white labels {labels}")
        quad_colors = [g.edge_colors.get(e) for e in _quad_edges(quad)]
        if any(c is None for c in quad_colors):
            violations.append(f"edge color missing: quad {index}")
        elif any(quad_colors[i] == quad_colors[(i + 1) % 4] for i in range(4)):
            violations.append(f"edge coloring: quad {index} does not alternate")
        for i in range(4):
            arc = (quad[i], quad[(i + 1) % 4])
            if arc in directed:
                violations.append(f"orientation: edge {arc} traversed twice")
            directed.add(arc)

    for edge, incident in g.quads_by_edge.items():
        if len(incident) > 2:
            violations.append(f"non-manifold edge: {edge} in {len(incident)} quads")

    for v in range(g.n_vertices):
        if g.is_boundary(v):
            continue
        kind = g.kinds[v]
        degree = g.degree(v)
        if kind is VertexKind.BLACK and degree != 4:
            violations.append(f"black degree: interior vertex {v} has degree {degree}")
        elif kind is VertexKind.CIRCLE and degree != 4:
            violations.append(f"circle degree: interior vertex {v} has degree {degree}")
        elif kind is VertexKind.SPHERE and degree % 2:
            violations.append(f"white degree: interior vertex {v} has odd degree")

    if not _connected(g):
        violations.append("connectivity: graph is not connected")

    euler = g.n_vertices - len(g.edges) + len(g.quads)
    if euler != 1:
        violations.append(f"euler characteristic: V - E + F = {euler}, expected 1")

    return violations


def require_valid(g: SQuadGraph) -> SQuadGraph:
    """Raise GraphValidationError unless g is a valid S-quad graph."""
    violations = validate(g)
    if violations:
        raise GraphValidationError(
            f"Invalid S-quad graph ({len(violations)} violations): {violations[0]}",
            violations=violations,
        )
    return g


def euler_characteristic(g: SQuadGraph) -> int:
    """V - E + F of the open complex."""
    return g.n_vertices - len(g.edges) + len(g.quads)


def iter_s_edges(g: SQuadGraph) -> Iterable[tuple[int, int, EdgeColor]]:
    """S-edges as (white, black, color)."""
    for u, v in g.edges:
        white, black = (u, v) if g.kinds[u].is_white else (v, u)
        yield white, black, g.edge_colors[(u, v)]
