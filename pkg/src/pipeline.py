"""Pipeline orchestration: solve, embed, lift, build, verify, export."""

from __future__ import annotations

import math
from collections.abc import Callable, Iterator
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
from loguru import logger
from scipy.optimize import brentq

from . import __version__
from .cmc import (
    CmcPair,
    CurvatureReport,
    cmc_radii,
    curvatures,
    darboux_parameters,
    integrate_one_forms,
    replicate_by_reflection,
)
from .config import Config, PipelineConfig
from .core.error_handler import ErrorHandler
from .core.exceptions import CmcError, ConfigurationError, NoBracket
from .elliptic import as_modulus
from .export import (
    cmc_document,
    koebe_meshes,
    load_graph,
    pattern_document,
    solution_document,
    surface_meshes,
    write_obj,
    write_pattern_svg,
    write_yaml,
)
from .koebe import KoebePair, lift
from .layout import EmbeddedRingPattern, embed, side_length
from .quadgraph import (
    SQuadGraph,
    build_rectangle,
    central_extension,
    require_valid,
    umbilic_quad_graph,
)
from .ringpattern import (
    BoundaryData,
    PatternSolution,
    SolverSettings,
    dirichlet_boundary,
    rectangle_boundary,
    solve,
)
from .verify import VerificationReport, VerifyTolerances, run_all

STAGES = ("graph", "search", "solve", "embed", "lift", "build", "verify", "export")


@dataclass
class PipelineArtifacts:
    """Everything a pipeline run produced, stage by stage."""

    graph: SQuadGraph | None = None
    q: float | None = None
    solution: PatternSolution | None = None
    pattern: EmbeddedRingPattern | None = None
    koebe: KoebePair | None = None
    pair: CmcPair | None = None
    curvature: CurvatureReport | None = None
    report: VerificationReport | None = None
    files: dict[str, Path] = field(default_factory=dict)

    def summary(self) -> dict[str, Any]:
        """Headline numbers of the run."""
        summary: dict[str, Any] = {"q": self.q}
        if self.curvature is not None:
            summary["max_mean_curvature_deviation"] = (
                self.curvature.mean_curvature_deviation
            )
            summary["worst_closure"] = max(
                self.curvature.closure_residuals.values(), default=0.0
            )
        if self.pair is not None:
            summary["lambda"] = self.pair.lam
            alphas = list(darboux_parameters(self.pair).values())
            if alphas:
                summary["alpha"] = -0.5 * float(np.mean(alphas))
        if self.report is not None:
            summary["passed"] = self.report.passed
            summary["failed_checks"] = [c.key for c in self.report.failures]
        return summary


def search_q(
    residual: Callable[[float], float],
    bracket: tuple[float, float],
    xtol: float = 1e-6,
) -> float:
    """
    Root of a closing residual in q by Brent's method.

    Raises:
        NoBracket: the residual has the same sign at both ends of the bracket
    """
    low, high = bracket
    f_low, f_high = residual(low), residual(high)
    logger.debug(f"Search bracket [{low}, {high}]: residuals {f_low:.3e}, {f_high:.3e}")
    if f_low == 0.0:
        return float(low)
    if f_high == 0.0:
        return float(high)
    if math.copysign(1.0, f_low) == math.copysign(1.0, f_high):
        raise NoBracket(
            f"Residual has the same sign at q={low} and q={high}",
            residual=min(abs(f_low), abs(f_high)),
            context={"bracket": [low, high], "values": [f_low, f_high]},
        )
    q = float(brentq(residual, low, high, xtol=xtol))
    logger.info(f"Closing criterion satisfied at q={q:.8f}")
    return q


class Pipeline:
    """Runs the construction stages for one configuration."""

    def __init__(self, config: Config):
        """Initialize the pipeline."""
        self.config = config
        self.settings: PipelineConfig = config.pipeline
        self.error_handler = ErrorHandler()
        self.stats: dict[str, Any] = {"stages_completed": [], "solver_iterations": 0}

    @contextmanager
    def _stage(self, name: str) -> Iterator[None]:
        """Attribute errors raised inside to a stage."""
        logger.info(f"Stage {name} started")
        try:
            yield
        except CmcError as e:
            if "stage" not in (e.context or {}):
                e.context = {**(e.context or {}), "stage": name}
                self.error_handler.handle_error(e)
            raise
        self.stats["stages_completed"].append(name)
        logger.info(f"Stage {name} finished")

    def provenance(self) -> dict[str, Any]:
        return {
            "version": __version__,
            "config_digest": self.config.digest(),
            "config": self.settings.model_dump(mode="json"),
        }

    def build_graph(self) -> SQuadGraph:
        graph = self.settings.graph
        with self._stage("graph"):
            if graph.kind == "rectangle":
                g = build_rectangle(*graph.rectangle)
            elif graph.kind == "umbilic":
                g = central_extension(umbilic_quad_graph(graph.umbilic_size))
            else:
                if graph.path is None:
                    raise ConfigurationError(
                        "graph.kind 'file' needs graph.path", config_key="graph.path"
                    )
                g = load_graph(graph.path)
            return require_valid(g)

    def boundary(self, g: SQuadGraph, q: float) -> BoundaryData:
        """Boundary data from the configuration; Dirichlet values are multiples of K."""
        bc = self.settings.boundary
        if bc.kind == "dirichlet":
            return dirichlet_boundary(g, bc.dirichlet_value * as_modulus(q).K)
        corners = bc.corner_radians()
        if len(corners) != len(g.corners):
            raise ConfigurationError(
                f"Graph has {len(g.corners)} corners but boundary.corner_angles "
                f"lists {len(corners)}",
                config_key="boundary.corner_angles",
            )
        return rectangle_boundary(
            g, bc.side_radians(), corners, overrides=bc.override_radians()
        )

    def solver_settings(self) -> SolverSettings:
        s = self.settings.solver
        return SolverSettings(
            tolerance=s.tolerance,
            max_iterations=s.max_iterations,
            init_scale=s.init_scale,
            continuation_steps=s.continuation_steps,
        )

    def solve(self, g: SQuadGraph, q: float) -> PatternSolution:
        with self._stage("solve"):
            sol = solve(g, q, self.boundary(g, q), self.settings.flavor, self.solver_settings())
        self.stats["solver_iterations"] += sol.iterations
        return sol

    def embed(self, sol: PatternSolution) -> EmbeddedRingPattern:
        layout = self.settings.layout
        with self._stage("embed"):
            return embed(sol, tolerance=layout.tolerance, polish=layout.polish)

    def lift(self, pat: EmbeddedRingPattern) -> KoebePair:
        with self._stage("lift"):
            return lift(pat, tolerance=self.settings.layout.tolerance)

    def build(self, kp: KoebePair) -> tuple[CmcPair, CurvatureReport]:
        with self._stage("build"):
            pair = integrate_one_forms(
                kp,
                cmc_radii(kp.pattern.solution),
                tolerance=self.settings.layout.closure_tolerance,
            )
            return pair, curvatures(pair)

    def verify(self, artifacts: PipelineArtifacts) -> VerificationReport:
        with self._stage("verify"):
            return run_all(
                solution=artifacts.solution,
                pattern=artifacts.pattern,
                koebe=artifacts.koebe,
                pair=artifacts.pair,
                tolerances=VerifyTolerances.from_mapping(self.settings.verify.tolerances),
                provenance=self.provenance(),
            )

    def closing_residual(self, g: SQuadGraph) -> Callable[[float], float]:
        """The configured closing criterion as a function of q."""
        search = self.settings.search

        def residual(q: float) -> float:
            pat = self.embed(self.solve(g, q))
            if search.criterion == "side_ratio":
                return math.log(side_length(pat, 0) / side_length(pat, 3)) - math.log(
                    search.target
                )
            return side_length(pat, search.side) - search.target

        return residual

    def resolve_q(self, g: SQuadGraph) -> float:
        if self.settings.q != "search":
            return float(self.settings.q)
        search = self.settings.search
        with self._stage("search"):
            return search_q(self.closing_residual(g), search.bracket, search.xtol)

    def export(self, artifacts: PipelineArtifacts) -> dict[str, Path]:
        output = self.settings.output
        directory = Path(output.directory)
        with self._stage("export"):
            directory.mkdir(parents=True, exist_ok=True)
            provenance = self.provenance()
            header = self.config.echo()
            files: dict[str, Path] = {}
            if artifacts.solution is not None:
                files["solution"] = write_yaml(
                    solution_document(artifacts.solution), directory / "solution.yaml", provenance
                )
            if artifacts.pattern is not None:
                files["pattern"] = write_yaml(
                    pattern_document(artifacts.pattern), directory / "pattern.yaml", provenance
                )
                if output.pattern_svg:
                    files["pattern_svg"] = write_pattern_svg(
                        artifacts.pattern,
                        directory / "pattern.svg",
                        title=self.settings.name,
                        description=f"config sha256 {self.config.digest()}",
                    )
            if output.obj and artifacts.koebe is not None:
                files["koebe"] = write_obj(
                    directory / "koebe.obj", koebe_meshes(artifacts.koebe), header
                )
            if artifacts.pair is not None:
                if output.obj:
                    copies = (
                        replicate_by_reflection(artifacts.pair, output.reflections)
                        if output.reflections
                        else []
                    )
                    files["surface"] = write_obj(
                        directory / "surface.obj", surface_meshes(artifacts.pair, copies), header
                    )
                if artifacts.curvature is not None:
                    document = {
                        **artifacts.curvature.to_document(),
                        **cmc_document(artifacts.pair),
                    }
                    files["curvature"] = write_yaml(
                        document, directory / "curvature.yaml", provenance
                    )
            if output.reports and artifacts.report is not None:
                files["report"] = artifacts.report.write(directory / "report.yaml")
            files["summary"] = write_yaml(
                artifacts.summary(), directory / "summary.yaml", provenance
            )
        logger.info(f"Wrote {len(files)} artifacts to {directory}")
        return files

    def run(self, until: str = "verify", write: bool = True) -> PipelineArtifacts:
        """Run every stage up to and including ``until``, then write what exists."""
        if until not in STAGES:
            raise ConfigurationError(f"Unknown stage: {until}", config_key="until")
        stop = STAGES.index(until)
        artifacts = PipelineArtifacts()

        artifacts.graph = self.build_graph()
        if stop >= STAGES.index("search"):
            artifacts.q = self.resolve_q(artifacts.graph)
        if stop >= STAGES.index("solve"):
            artifacts.solution = self.solve(artifacts.graph, artifacts.q)
        if stop >= STAGES.index("embed"):
            artifacts.pattern = self.embed(artifacts.solution)
        if stop >= STAGES.index("lift"):
            artifacts.koebe = self.lift(artifacts.pattern)
        if stop >= STAGES.index("build"):
            artifacts.pair, artifacts.curvature = self.build(artifacts.koebe)
        if stop >= STAGES.index("verify"):
            artifacts.report = self.verify(artifacts)
        if write or stop >= STAGES.index("export"):
            artifacts.files = self.export(artifacts)

        logger.info(f"Pipeline summary: {artifacts.summary()}")
        return artifacts


def run_pipeline(config: Config) -> PipelineArtifacts:
    """Run every stage and write all artifacts."""
    return Pipeline(config).run()
