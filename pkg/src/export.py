"""Mesh, figure and structured-text outputs."""

from __future__ import annotations

from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import matplotlib
import numpy as np
import yaml
from loguru import logger
from matplotlib.figure import Figure
from numpy.typing import NDArray

from .cmc import CmcPair
from .core.exceptions import ConfigurationError, ErrorSeverity
from .geometry import exp_map, rotate_tangent, tangent_direction, to_plane
from .koebe import KoebePair
from .layout import EmbeddedRingPattern
from .quadgraph import SQuadGraph, VertexKind
from .ringpattern import PatternSolution

_RING_SAMPLES = 96


@dataclass
class Mesh:
    """One object group: vertex positions and polygon faces (local indices)."""

    name: str
    vertices: NDArray[np.float64]
    faces: list[tuple[int, ...]]

    @classmethod
    def from_net(
        cls,
        name: str,
        points: NDArray[np.float64],
        faces: Iterable[Sequence[int]],
    ) -> Mesh:
        """Collect the vertices used by faces given in global vertex ids."""
        faces = [tuple(int(v) for v in face) for face in faces if len(face) >= 3]
        used = sorted({v for face in faces for v in face})
        local = {v: i for i, v in enumerate(used)}
        return cls(
            name,
            np.asarray(points)[used],
            [tuple(local[v] for v in face) for face in faces],
        )


def _fan(face: tuple[int, ...]) -> list[tuple[int, ...]]:
    """Quads and triangles as-is; larger polygons fan-triangulated."""
    if len(face) <= 4:
        return [face]
    return [(face[0], face[i], face[i + 1]) for i in range(1, len(face) - 1)]


def obj_text(meshes: Sequence[Mesh], header: str = "") -> str:
    lines = [f"# {line}" if line else "#" for line in header.splitlines()]
    offset = 1
    for mesh in meshes:
        lines.append(f"o {mesh.name}")
        lines.extend(f"v {x:.12g} {y:.12g} {z:.12g}" for x, y, z in mesh.vertices)
        for face in mesh.faces:
            for piece in _fan(face):
                lines.append("f " + " ".join(str(v + offset) for v in piece))
        offset += len(mesh.vertices)
    return "\n".join(lines) + "\n"


def write_obj(path: str | Path, meshes: Sequence[Mesh], header: str = "") -> Path:
    """Wavefront OBJ with one object group per net."""
    path = Path(path)
    path.write_text(obj_text(meshes, header), encoding="utf-8")
    logger.debug(f"Wrote {len(meshes)} meshes to {path}")
    return path


def koebe_meshes(kp: KoebePair) -> list[Mesh]:
    """The sphere-vertex and circle-vertex nets of a Koebe pair."""
    g = kp.graph
    return [
        Mesh.from_net("koebe_sphere_net", kp.points, g.faces_of_G.values()),
        Mesh.from_net("koebe_circle_net", kp.points, g.faces_of_G_star.values()),
    ]


def surface_meshes(
    pair: CmcPair,
    copies: Sequence[tuple[NDArray[np.float64], NDArray[np.float64]]] = (),
) -> list[Mesh]:
    """Quad meshes of c, c* and n on the faces of G, plus reflected copies of c and c*."""
    faces = list(pair.graph.faces_of_G.values())
    meshes = [
        Mesh.from_net("surface", pair.c, faces),
        Mesh.from_net("parallel_surface", pair.c_star, faces),
        Mesh.from_net("gauss_map", pair.gauss, faces),
    ]
    for i, (c, c_star) in enumerate(copies[1:], start=1):
        meshes.append(Mesh.from_net(f"surface_copy_{i}", c, faces))
        meshes.append(Mesh.from_net(f"parallel_surface_copy_{i}", c_star, faces))
    return meshes


def _ring(pat: EmbeddedRingPattern, w: int, rho: float) -> NDArray[np.float64]:
    p = pat.points[w]
    b = pat.graph.neighbors[w][0]
    v = tangent_direction(p, pat.points[b], pat.flavor)
    angles = np.linspace(0.0, 2.0 * np.pi, _RING_SAMPLES + 1)
    samples = [
        exp_map(p, rotate_tangent(p, v, a, pat.flavor), abs(rho), pat.flavor) for a in angles
    ]
    return to_plane(np.array(samples))


def write_pattern_svg(
    pat: EmbeddedRingPattern, path: str | Path, title: str = "", description: str = ""
) -> Path:
    """Stereographic (or Poincare disk) picture of the rings and touching points."""
    path = Path(path)
    fig = Figure(figsize=(6, 6))
    ax = fig.add_subplot()
    g = pat.graph
    for w in g.white_vertices:
        color = "tab:blue" if g.kinds[w] is VertexKind.SPHERE else "tab:orange"
        r, R = pat.radii[w]
        for rho in (r, R):
            ring = _ring(pat, w, rho)
            ax.plot(ring[:, 0], ring[:, 1], color=color, linewidth=0.6)
    touch = to_plane(pat.points[list(g.black_vertices)])
    ax.scatter(touch[:, 0], touch[:, 1], s=4, color="black", zorder=3)
    ax.set_aspect("equal")
    ax.set_axis_off()
    if title:
        ax.set_title(title)
    with matplotlib.rc_context({"svg.hashsalt": "discrete-cmc"}):
        fig.savefig(
            path,
            format="svg",
            metadata={"Date": None, "Title": title or None, "Description": description or None},
        )
    logger.debug(f"Wrote pattern figure to {path}")
    return path


def _vector(v: Any) -> list[float]:
    return [float(x) for x in v]


def solution_document(sol: PatternSolution) -> dict[str, Any]:
    return {
        "flavor": sol.flavor.value,
        "q": sol.q,
        "K": sol.modulus.K,
        "boundary": sol.boundary.kind.value if sol.boundary is not None else None,
        "residual": float(sol.residual),
        "iterations": sol.iterations,
        "continuation_steps": int(sol.extra.get("continuation_steps", 0)),
        "orientation_mismatch": [int(v) for v in sol.extra.get("orientation_mismatch", [])],
        "values": sol.as_mapping(),
    }


def pattern_document(pat: EmbeddedRingPattern) -> dict[str, Any]:
    g = pat.graph
    return {
        "flavor": pat.flavor.value,
        "residual": float(pat.residual),
        "centers": {int(w): _vector(pat.points[w]) for w in g.white_vertices},
        "radii": {int(w): _vector(pat.radii[w]) for w in g.white_vertices},
        "touching_points": {int(b): _vector(pat.points[b]) for b in g.black_vertices},
    }


def cmc_document(pair: CmcPair) -> dict[str, Any]:
    g = pair.graph
    return {
        "flavor": pair.flavor.value,
        "lambda": pair.lam,
        "origin": pair.origin,
        "radii": {int(w): _vector(pair.radii[w]) for w in g.white_vertices},
    }


def write_yaml(
    document: Mapping[str, Any], path: str | Path, provenance: Mapping[str, Any] | None = None
) -> Path:
    """YAML with sorted keys; provenance is embedded under its own key."""
    path = Path(path)
    doc = dict(document)
    if provenance is not None:
        doc["provenance"] = dict(provenance)
    path.write_text(yaml.safe_dump(doc, sort_keys=True), encoding="utf-8")
    return path


def dump_graph(g: SQuadGraph, path: str | Path) -> Path:
    return write_yaml(g.to_document(), path)


def load_graph(path: str | Path) -> SQuadGraph:
    """Read a serialized S-quad graph."""
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(
            f"Graph file not found: {path}",
            config_key="graph.path",
            severity=ErrorSeverity.CRITICAL,
        )
    try:
        document = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as e:
        raise ConfigurationError(
            f"Error parsing graph file: {e}", config_key="graph.path"
        )
    if not isinstance(document, dict):
        raise ConfigurationError("Graph file must contain a mapping", config_key="graph.path")
    return SQuadGraph.from_document(document)
