"""Verification harness and small-instance oracles."""

from __future__ import annotations

import math
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml
from loguru import logger
from scipy.optimize import bisect

from .cmc import (
    CmcPair,
    christoffel_residual,
    curvatures,
    darboux_constant,
    darboux_parameters,
    edge_normal_lengths,
    face_normal_residuals,
    lambda_residual,
    touching_residuals,
)
from .core.exceptions import CmcError, DomainError, NoRoot
from .elliptic import as_modulus
from .geometry import Flavor
from .koebe import KoebePair, verify_koebe
from .layout import EmbeddedRingPattern, pattern_residuals
from .quadgraph import SQuadGraph
from .ringpattern import (
    PatternSolution,
    RingFunctional,
    dirichlet_boundary,
    interior_residuals,
    phi_assignment,
)

SECTIONS = ("solution", "pattern", "koebe", "cmc")

PATTERN_CHECKS = (
    "normalization",
    "q-relation",
    "incidence",
    "neighbour distance",
    "orthogonality",
    "angle sum",
    "orientation",
)
KOEBE_CHECKS = (
    "tangency",
    "planarity",
    "polarity",
    "duality",
    "regularity",
    "edge lengths",
    "edge length forms",
)
CMC_CHECKS = (
    "closure",
    "mean curvature",
    "lambda",
    "darboux",
    "edge normals",
    "face normals",
    "touching",
    "christoffel",
)


@dataclass(frozen=True)
class VerifyTolerances:
    """Pass thresholds per check family."""

    stationarity: float = 1e-9
    box: float = 1e-12
    pattern: float = 1e-6
    koebe: float = 1e-7
    edge_length_forms: float = 1e-8
    closure: float = 1e-7
    mean_curvature: float = 1e-6
    lambda_: float = 1e-8
    darboux: float = 1e-7
    edge_normals: float = 1e-7
    face_normals: float = 1e-7
    touching: float = 1e-7
    christoffel: float = 1e-7

    @classmethod
    def from_mapping(cls, values: Mapping[str, float]) -> VerifyTolerances:
        renamed = {("lambda_" if k == "lambda" else k): v for k, v in values.items()}
        known = {k: float(v) for k, v in renamed.items() if k in cls.__dataclass_fields__}
        return cls(**known)


@dataclass
class CheckResult:
    """Outcome of one invariant check."""

    section: str
    name: str
    worst: float
    tolerance: float
    skipped: str | None = None
    tainted_by: str | None = None
    note: str | None = None

    @property
    def passed(self) -> bool:
        if self.skipped is not None:
            return True
        return bool(self.worst <= self.tolerance)

    @property
    def key(self) -> str:
        return f"{self.section}.{self.name}"

    def to_document(self) -> dict[str, Any]:
        doc: dict[str, Any] = {
            "name": self.name,
            "worst": float(self.worst),
            "tolerance": float(self.tolerance),
            "passed": self.passed,
        }
        if self.skipped is not None:
            doc["skipped"] = self.skipped
        if self.tainted_by is not None:
            doc["tainted_by"] = self.tainted_by
        if self.note is not None:
            doc["note"] = self.note
        return doc


@dataclass
class VerificationReport:
    """Every check of every section, in a fixed order."""

    checks: list[CheckResult] = field(default_factory=list)
    provenance: dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def failures(self) -> list[CheckResult]:
        return [check for check in self.checks if not check.passed]

    def section(self, name: str) -> list[CheckResult]:
        return [check for check in self.checks if check.section == name]

    def get(self, key: str) -> CheckResult:
        for check in self.checks:
            if check.key == key:
                return check
        raise KeyError(key)

    def to_document(self) -> dict[str, Any]:
        return {
            "passed": self.passed,
            "provenance": self.provenance,
            "sections": {
                name: [check.to_document() for check in self.section(name)]
                for name in SECTIONS
            },
        }

    def dump(self) -> str:
        return yaml.safe_dump(self.to_document(), sort_keys=True)

    def write(self, path: str | Path) -> Path:
        path = Path(path)
        path.write_text(self.dump(), encoding="utf-8")
        return path


class _Section:
    """Collects the checks of one section and applies upstream taint."""

    def __init__(self, report: VerificationReport, name: str, taint: str | None):
        self.report = report
        self.name = name
        self.taint = taint

    def skip(self, names: tuple[str, ...], reason: str, tolerance: float = 0.0) -> None:
        for check in names:
            self.add(check, math.nan, tolerance, skipped=reason)

    def add(
        self,
        check: str,
        worst: float,
        tolerance: float,
        skipped: str | None = None,
        note: str | None = None,
    ) -> CheckResult:
        result = CheckResult(
            self.name,
            check,
            float(worst),
            tolerance,
            skipped=skipped,
            tainted_by=self.taint if skipped is None else None,
            note=note,
        )
        self.report.checks.append(result)
        if skipped is not None:
            logger.warning(f"Skipped check {result.key}: {skipped}")
        elif not result.passed:
            logger.debug(f"Check {result.key} failed: {worst:.3e} > {tolerance:.1e}")
        return result

    def run(self, check: str, tolerance: float, compute: Callable[[], float]) -> None:
        try:
            worst = float(compute())
        except (CmcError, ValueError, ArithmeticError, np.linalg.LinAlgError) as e:
            self.add(check, math.inf, tolerance, note=str(e))
            return
        if math.isnan(worst):
            self.add(check, worst, tolerance, skipped="not applicable")
        else:
            self.add(check, worst, tolerance)

    def first_failure(self) -> str | None:
        for check in self.report.section(self.name):
            if not check.passed:
                return check.key
        return None


def _solution_checks(section: _Section, sol: PatternSolution, tol: VerifyTolerances) -> None:
    def stationarity() -> float:
        residuals = interior_residuals(sol)
        return max((abs(r) for r in residuals.values()), default=0.0)

    def box() -> float:
        upper = 2.0 * sol.modulus.K
        return float(np.max(np.maximum(0.0, np.maximum(-sol.values, sol.values - upper))))

    section.run("interior stationarity", tol.stationarity, stationarity)
    section.run("box", tol.box, box)


def _mapping_checks(
    section: _Section,
    names: tuple[str, ...],
    compute: Callable[[], dict[str, float]],
    tolerance: Callable[[str], float],
) -> None:
    try:
        values = compute()
    except (CmcError, ValueError, ArithmeticError, np.linalg.LinAlgError) as e:
        for name in names:
            section.add(name, math.inf, tolerance(name), note=str(e))
        return
    for name in names:
        worst = values.get(name, math.nan)
        if math.isnan(worst):
            section.add(name, worst, tolerance(name), skipped="not applicable")
        else:
            section.add(name, worst, tolerance(name))


def _edge_normal_spread(pair: CmcPair) -> float:
    grouped = edge_normal_lengths(pair)
    spread = max((float(np.ptp(v)) for v in grouped.values() if len(v)), default=0.0)
    if pair.flavor is Flavor.HYPERBOLIC:
        values = np.concatenate([v for v in grouped.values() if len(v)])
        if np.any(values >= 0.0):
            return math.inf
    return spread


def _cmc_checks(section: _Section, pair: CmcPair, tol: VerifyTolerances) -> None:
    section.run("closure", tol.closure, lambda: max(pair.closure.values(), default=0.0))
    section.run(
        "mean curvature", tol.mean_curvature, lambda: curvatures(pair).mean_curvature_deviation
    )
    section.run("lambda", tol.lambda_, lambda: lambda_residual(pair))

    def darboux() -> float:
        target = darboux_constant(pair.q, pair.flavor)
        return max((abs(v - target) for v in darboux_parameters(pair).values()), default=0.0)

    section.run("darboux", tol.darboux, darboux)
    section.run("edge normals", tol.edge_normals, lambda: _edge_normal_spread(pair))
    section.run("face normals", tol.face_normals, lambda: face_normal_residuals(pair))
    section.run("touching", tol.touching, lambda: touching_residuals(pair))
    section.run("christoffel", tol.christoffel, lambda: christoffel_residual(pair))


def run_all(
    solution: PatternSolution | None = None,
    pattern: EmbeddedRingPattern | None = None,
    koebe: KoebePair | None = None,
    pair: CmcPair | None = None,
    tolerances: VerifyTolerances | None = None,
    provenance: Mapping[str, Any] | None = None,
) -> VerificationReport:
    """
    Run every applicable check on whatever artifacts are supplied.

    Upstream artifacts are recovered from downstream ones. Checks that cannot
    run are listed as skipped; a failure in one section marks every later
    check as tainted by it. Never raises for geometric failures.
    """
    tol = tolerances or VerifyTolerances()
    if pair is not None and koebe is None:
        koebe = pair.koebe
    if koebe is not None and pattern is None:
        pattern = koebe.pattern
    if pattern is not None and solution is None:
        solution = pattern.solution

    report = VerificationReport(provenance=dict(provenance or {}))
    taint: str | None = None

    section = _Section(report, "solution", taint)
    if solution is None:
        section.skip(("interior stationarity", "box"), "no pattern solution")
    else:
        _solution_checks(section, solution, tol)
    taint = taint or section.first_failure()

    section = _Section(report, "pattern", taint)
    if pattern is None:
        section.skip(PATTERN_CHECKS, "no embedded pattern", tol.pattern)
    else:
        _mapping_checks(
            section, PATTERN_CHECKS, lambda: pattern_residuals(pattern), lambda _: tol.pattern
        )
    taint = taint or section.first_failure()

    section = _Section(report, "koebe", taint)
    if koebe is None:
        section.skip(KOEBE_CHECKS, "no Koebe net", tol.koebe)
    else:
        _mapping_checks(
            section,
            KOEBE_CHECKS,
            lambda: verify_koebe(koebe),
            lambda name: tol.edge_length_forms if name == "edge length forms" else tol.koebe,
        )
    taint = taint or section.first_failure()

    section = _Section(report, "cmc", taint)
    if pair is None:
        section.skip(CMC_CHECKS, "no cmc surface")
    else:
        _cmc_checks(section, pair, tol)

    failed = len(report.failures)
    logger.info(
        f"Verification {'passed' if report.passed else 'failed'}: "
        f"{len(report.checks)} checks, {failed} failed"
    )
    return report


def brute_force_interior(
    g: SQuadGraph,
    q: float,
    flavor: Flavor,
    boundary_values: float | Mapping[int, float],
    samples: int = 4096,
    xtol: float = 1e-12,
) -> float:
    """
    Stationary value of the single interior variable with all boundary
    variables fixed, by a dense scan of (0, 2K) followed by bisection.

    Raises:
        DomainError: the graph does not have exactly one interior white vertex
        NoRoot: the scan finds no sign change
    """
    interior = g.interior_whites
    if len(interior) != 1:
        raise DomainError(
            f"Expected one interior white vertex, found {len(interior)}",
            parameter="graph",
        )
    mod = as_modulus(q)
    bd = dirichlet_boundary(g, boundary_values)
    phi = phi_assignment(g, bd, flavor)
    functional = RingFunctional(g, mod, flavor, phi)
    index = g.white_index[interior[0]]
    x = np.zeros(len(g.white_vertices))
    for v in g.boundary_whites:
        x[g.white_index[v]] = bd.fixed[v]

    def residual(t: float) -> float:
        trial = x.copy()
        trial[index] = t
        return float(functional.gradient(trial)[index])

    upper = 2.0 * mod.K
    grid = np.linspace(0.0, upper, samples + 1)[1:-1]
    values = np.array([residual(t) for t in grid])
    changes = np.nonzero(np.sign(values[:-1]) * np.sign(values[1:]) <= 0)[0]
    if len(changes) == 0:
        raise NoRoot(
            "Interior stationarity has no sign change on (0, 2K)",
            residual=float(np.min(np.abs(values))),
        )
    k = int(changes[0])
    if values[k] == 0.0:
        return float(grid[k])
    return float(bisect(residual, grid[k], grid[k + 1], xtol=xtol))
