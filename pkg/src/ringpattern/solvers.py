"""
Boundary value solvers for ring patterns.

The hyperbolic functional is convex and is minimized by projected Newton.
The spherical functional has index one along (1, ..., 1); it is maximized
exactly along that direction and the reduced functional is minimized on the
hyperplane sum(beta) = 0 with sparse Newton steps, falling back to steepest
descent where the reduced Hessian is indefinite. Close to the solution the
spherical solver switches to plain Newton on the gradient, and when the
direct solve fails it follows a continuation in Phi that starts from data
for which the constant K is stationary.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Any

import numpy as np
from loguru import logger
from numpy.typing import NDArray
from scipy import optimize
from scipy.sparse.linalg import MatrixRankWarning, spsolve

from ..core.exceptions import (
    DomainError,
    InfeasibleBoundary,
    NonConvergence,
    SaddleEscape,
)
from ..elliptic import Modulus, as_modulus
from ..geometry import Flavor
from ..quadgraph import SQuadGraph
from .boundary import (
    POSITIVE,
    BoundaryData,
    BoundaryKind,
    orientation_from_angles,
    phi_assignment,
)
from .functional import PatternSolution, RingFunctional

_ARMIJO = 1e-4
_MIN_STEP = 1e-12
# residual below which the spherical solver runs plain Newton on the gradient
_LOCAL_SWITCH = 1e-6
_MIN_POLISH_STEP = 1.0 / 1024.0
_MIN_CONTINUATION_STEP = 1e-4
# converged rings further than this (relative to K) on the wrong side of K
_ORIENTATION_BAND = 1e-8


@dataclass(frozen=True)
class SolverSettings:
    """Tolerances and limits shared by both solvers."""

    tolerance: float = 1e-10
    max_iterations: int = 200
    init_scale: float = 0.8
    continuation_steps: int = 8
    box_epsilon: float = 1e-9


def _box(mod: Modulus, settings: SolverSettings) -> tuple[float, float]:
    eps = settings.box_epsilon * mod.K
    return eps, 2.0 * mod.K - eps


def _initial(
    g: SQuadGraph,
    mod: Modulus,
    bd: BoundaryData,
    settings: SolverSettings,
    initial: NDArray[np.float64] | None,
) -> NDArray[np.float64]:
    lo, hi = _box(mod, settings)
    if initial is None:
        x = np.full(len(g.white_vertices), settings.init_scale * mod.K)
    else:
        x = np.array(initial, dtype=float)
    if bd.kind is BoundaryKind.DIRICHLET:
        for v, value in bd.fixed.items():
            x[g.white_index[v]] = value
    return np.asarray(np.clip(x, lo, hi))


def _max_abs(values: NDArray[np.float64]) -> float:
    return float(np.max(np.abs(values), initial=0.0))


def _projected_gradient(
    x: NDArray[np.float64], grad: NDArray[np.float64], lo: float, hi: float
) -> NDArray[np.float64]:
    blocked = ((x <= lo) & (grad > 0)) | ((x >= hi) & (grad < 0))
    return np.where(blocked, 0.0, grad)


def _newton_direction(
    functional: RingFunctional, x: NDArray[np.float64], grad: NDArray[np.float64]
) -> NDArray[np.float64] | None:
    """Sparse solution of H d = -grad, or None when H is singular."""
    H = functional.hessian(x).tocsc()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", MatrixRankWarning)
        try:
            direction = np.atleast_1d(np.asarray(spsolve(H, -grad), dtype=float))
        except RuntimeError:
            return None
    if not np.all(np.isfinite(direction)):
        return None
    return direction


def _orientation_mismatch(
    g: SQuadGraph, values: NDArray[np.float64], mod: Modulus, bd: BoundaryData
) -> list[int]:
    """Boundary rings whose variable sits on the other side of K than their sign."""
    if bd.kind is not BoundaryKind.NEUMANN:
        return []
    band = _ORIENTATION_BAND * mod.K
    index = g.white_index
    mismatch = []
    for v in g.boundary_whites:
        value = float(values[index[v]])
        if bd.sign(v) == POSITIVE:
            if value > mod.K + band:
                mismatch.append(v)
        elif value < mod.K - band:
            mismatch.append(v)
    return mismatch


def _finish(
    g: SQuadGraph,
    mod: Modulus,
    flavor: Flavor,
    values: NDArray[np.float64],
    bd: BoundaryData,
    phi: NDArray[np.float64],
    residual: float,
    iterations: int,
    settings: SolverSettings,
    extra: dict[str, Any],
) -> PatternSolution:
    mismatch = _orientation_mismatch(g, values, mod, bd)
    if mismatch:
        logger.warning(
            f"{len(mismatch)} boundary rings converged on the far side of K "
            f"from their orientation: {mismatch[:8]}"
        )
        extra["orientation_mismatch"] = mismatch
    solution = PatternSolution(
        flavor=flavor,
        modulus=mod,
        graph=g,
        values=values,
        boundary=bd,
        phi=phi,
        residual=residual,
        iterations=iterations,
        extra=extra,
    )
    if residual > settings.tolerance:
        raise NonConvergence(
            f"{flavor.value} solver stopped at residual {residual:.3e} "
            f"after {iterations} iterations",
            residual=residual,
            iterations=iterations,
        )
    return solution


def _newton_hyperbolic(
    functional: RingFunctional,
    x: NDArray[np.float64],
    free: NDArray[np.bool_],
    lo: float,
    hi: float,
    settings: SolverSettings,
) -> tuple[NDArray[np.float64], float, int]:
    residual = math.inf
    iteration = 0
    for iteration in range(1, settings.max_iterations + 1):
        grad = functional.gradient(x)
        pg = _projected_gradient(x, grad, lo, hi)[free]
        residual = _max_abs(pg)
        logger.debug(f"hyperbolic newton it={iteration} residual={residual:.3e}")
        if residual <= settings.tolerance:
            break

        at_bound = ((x <= lo) & (grad > 0)) | ((x >= hi) & (grad < 0))
        work = free & ~at_bound
        direction = np.zeros_like(x)
        if np.any(work):
            H = functional.hessian(x)[work][:, work]
            direction[work] = spsolve(H.tocsc(), -grad[work])

        f0 = functional.value(x)
        step = 1.0
        accepted = None
        while step >= _MIN_STEP:
            trial = np.clip(x + step * direction, lo, hi)
            if functional.value(trial) <= f0 + _ARMIJO * float(grad @ (trial - x)):
                accepted = trial
                break
            step *= 0.5
        if accepted is None:
            # value differences are below rounding; fall back to the gradient norm
            trial = np.clip(x + direction, lo, hi)
            trial_pg = _projected_gradient(trial, functional.gradient(trial), lo, hi)
            if _max_abs(trial_pg[free]) >= residual:
                break
            accepted = trial
        x = accepted
    else:
        grad = functional.gradient(x)
        residual = _max_abs(_projected_gradient(x, grad, lo, hi)[free])
    return x, residual, iteration


def solve_hyperbolic(
    g: SQuadGraph,
    q: float | Modulus,
    bd: BoundaryData,
    settings: SolverSettings | None = None,
    initial: NDArray[np.float64] | None = None,
) -> PatternSolution:
    """
    Minimize the convex hyperbolic functional.

    Dirichlet data fixes the boundary variables; Neumann data enters through
    Phi. Bound constraints are handled by projection.

    Raises:
        InfeasibleBoundary: the minimizer sits on the box [0, 2K]
        NonConvergence: the residual stays above the tolerance
    """
    settings = settings or SolverSettings()
    mod = as_modulus(q)
    bd.validate(g, mod)
    bd = orientation_from_angles(g, bd)
    lo, hi = _box(mod, settings)
    free = np.ones(len(g.white_vertices), dtype=bool)
    if bd.kind is BoundaryKind.DIRICHLET:
        for v in bd.fixed:
            free[g.white_index[v]] = False

    logger.info(
        f"Solving hyperbolic {bd.kind.value} problem: q={mod.q}, "
        f"{int(free.sum())} free variables"
    )
    phi = phi_assignment(g, bd, Flavor.HYPERBOLIC)
    functional = RingFunctional(g, mod, Flavor.HYPERBOLIC, phi)
    x, residual, iterations = _newton_hyperbolic(
        functional, _initial(g, mod, bd, settings, initial), free, lo, hi, settings
    )
    solution = _finish(
        g, mod, Flavor.HYPERBOLIC, x, bd, phi, residual, iterations, settings, {}
    )
    span = 1e-6 * mod.K
    stuck = free & ((solution.values <= lo + span) | (solution.values >= hi - span))
    if np.any(stuck):
        stuck_ids = [g.white_vertices[i] for i in np.flatnonzero(stuck)]
        raise InfeasibleBoundary(
            f"Minimizer touches the box boundary at vertices {stuck_ids[:8]}",
            residual=solution.residual,
            iterations=solution.iterations,
            context={"vertices": stuck_ids},
        )
    logger.info(
        f"Hyperbolic solve converged: residual={solution.residual:.3e}, "
        f"iterations={solution.iterations}"
    )
    return solution


class _ReducedSpherical:
    """Spherical functional maximized along (1, ..., 1)."""

    def __init__(self, functional: RingFunctional, lo: float, hi: float):
        self.functional = functional
        self.lo = lo
        self.hi = hi
        total = float(np.sum(functional.phi))
        upper = 2.0 * math.pi * len(functional.i)
        if not 0.0 < total < upper:
            raise SaddleEscape(
                f"Inner maximization is unbounded: sum(Phi) = {total:.6g} "
                f"outside (0, {upper:.6g})",
                context={"phi_sum": total},
            )

    def inner_t(self, x: NDArray[np.float64]) -> float:
        t_lo = self.lo - float(np.min(x))
        t_hi = self.hi - float(np.max(x))
        if t_lo >= t_hi:
            return 0.5 * (t_lo + t_hi)
        slope = self.functional.directional_slope
        if slope(x, t_lo) <= 0.0:
            return t_lo
        if slope(x, t_hi) >= 0.0:
            return t_hi
        return float(optimize.brentq(lambda t: slope(x, t), t_lo, t_hi, xtol=1e-15))

    def lift(self, x: NDArray[np.float64]) -> NDArray[np.float64]:
        return np.asarray(np.clip(x + self.inner_t(x), self.lo, self.hi))

    def value(self, x: NDArray[np.float64]) -> float:
        return self.functional.value(self.lift(x))

    def step(
        self, x: NDArray[np.float64], beta: NDArray[np.float64]
    ) -> NDArray[np.float64] | None:
        """
        Next point of the hyperplane, or None when no direction descends.

        The Newton step of the full functional, projected onto the
        hyperplane, is the Newton step of the reduced functional. It is
        tried first; steepest descent takes over when it does not descend.
        """
        grad = self.functional.gradient(beta)
        projected = grad - grad.mean()
        f0 = self.functional.value(beta)
        directions = []
        newton = _newton_direction(self.functional, beta, grad)
        if newton is not None:
            directions.append(newton - newton.mean())
        directions.append(-projected)

        width = self.hi - self.lo
        for direction in directions:
            slope = float(projected @ direction)
            if slope >= 0.0:
                continue
            size = _max_abs(direction)
            step = min(1.0, 0.5 * width / size) if size > 0.0 else 1.0
            while step >= _MIN_STEP:
                trial = x + step * direction
                if float(np.ptp(trial)) < width:
                    if self.value(trial) <= f0 + _ARMIJO * step * slope:
                        return trial
                step *= 0.5
        return None


def _newton_polish(
    functional: RingFunctional,
    beta: NDArray[np.float64],
    lo: float,
    hi: float,
    tolerance: float,
    budget: int,
) -> tuple[NDArray[np.float64], float, int]:
    """Newton's method on grad = 0, backtracking on the largest residual."""
    grad = functional.gradient(beta)
    residual = _max_abs(grad)
    iterations = 0
    while iterations < budget and residual > tolerance:
        direction = _newton_direction(functional, beta, grad)
        if direction is None:
            break
        iterations += 1
        step = 1.0
        while step >= _MIN_POLISH_STEP:
            trial = np.clip(beta + step * direction, lo, hi)
            trial_grad = functional.gradient(trial)
            trial_residual = _max_abs(trial_grad)
            if trial_residual < (1.0 - _ARMIJO * step) * residual:
                beta, grad, residual = trial, trial_grad, trial_residual
                break
            step *= 0.5
        else:
            break
        logger.debug(f"newton polish it={iterations} residual={residual:.3e}")
    return beta, residual, iterations


def _newton_spherical(
    reduced: _ReducedSpherical,
    beta: NDArray[np.float64],
    settings: SolverSettings,
) -> tuple[NDArray[np.float64], float, int]:
    functional = reduced.functional
    x = beta - beta.mean()
    beta = reduced.lift(x)
    residual = _max_abs(functional.gradient(beta))
    switch = max(settings.tolerance, _LOCAL_SWITCH)
    iteration = 0
    while iteration < settings.max_iterations and residual > switch:
        iteration += 1
        trial = reduced.step(x, beta)
        if trial is None:
            logger.debug(f"no descent step on the reduced functional at {residual:.3e}")
            break
        x = trial - trial.mean()
        beta = reduced.lift(x)
        residual = _max_abs(functional.gradient(beta))
        logger.debug(f"spherical newton it={iteration} residual={residual:.3e}")

    beta, residual, polished = _newton_polish(
        functional,
        beta,
        reduced.lo,
        reduced.hi,
        settings.tolerance,
        settings.max_iterations - iteration,
    )
    return beta, residual, iteration + polished


def _continuation(
    g: SQuadGraph,
    mod: Modulus,
    phi: NDArray[np.float64],
    lo: float,
    hi: float,
    settings: SolverSettings,
) -> tuple[NDArray[np.float64], int, int]:
    """
    Follow Phi(s) = (1 - s) Phi0 + s Phi from s = 0 to s = 1.

    Phi0 makes the constant K stationary; each step is corrected by Newton's
    method from the previous solution, and the step halves on failure.
    Returns the last accepted variables, the Newton iterations spent and the
    number of accepted steps.
    """
    beta = np.clip(np.full(len(g.white_vertices), mod.K), lo, hi)
    start = phi - RingFunctional(g, mod, Flavor.SPHERICAL, phi).gradient(beta)
    s = 0.0
    step = 1.0 / settings.continuation_steps
    iterations = accepted = 0
    while s < 1.0:
        target = min(1.0, s + step)
        functional = RingFunctional(
            g, mod, Flavor.SPHERICAL, (1.0 - target) * start + target * phi
        )
        trial, residual, used = _newton_polish(
            functional, beta, lo, hi, settings.tolerance, settings.max_iterations
        )
        iterations += used
        if residual <= settings.tolerance:
            beta, s = trial, target
            accepted += 1
            step *= 1.5
            logger.debug(f"continuation reached s={s:.4f} in {used} iterations")
            continue
        step *= 0.5
        if step < _MIN_CONTINUATION_STEP:
            logger.warning(f"Continuation stalled at s={s:.4f}")
            break
    return beta, iterations, accepted


def solve_spherical_reduced(
    g: SQuadGraph,
    q: float | Modulus,
    bd: BoundaryData,
    settings: SolverSettings | None = None,
    initial: NDArray[np.float64] | None = None,
) -> PatternSolution:
    """
    Find the stationary point of the spherical functional for Neumann data.

    Raises:
        SaddleEscape: the maximization along (1, ..., 1) is unbounded
        NonConvergence: the residual stays above the tolerance
    """
    settings = settings or SolverSettings()
    mod = as_modulus(q)
    if bd.kind is not BoundaryKind.NEUMANN:
        raise DomainError(
            "Spherical patterns are solved for Neumann data only",
            parameter="boundary.kind",
            value=bd.kind.value,
        )
    bd.validate(g, mod)
    bd = orientation_from_angles(g, bd)
    lo, hi = _box(mod, settings)
    logger.info(
        f"Solving spherical Neumann problem: q={mod.q}, "
        f"{len(g.white_vertices)} variables"
    )

    phi = phi_assignment(g, bd, Flavor.SPHERICAL)
    functional = RingFunctional(g, mod, Flavor.SPHERICAL, phi)
    reduced = _ReducedSpherical(functional, lo, hi)
    beta, residual, iterations = _newton_spherical(
        reduced, _initial(g, mod, bd, settings, initial), settings
    )
    extra: dict[str, Any] = {}
    if residual > settings.tolerance and settings.continuation_steps > 0:
        logger.info(
            f"Direct solve stopped at residual {residual:.3e}; "
            "continuing from the constant K"
        )
        followed, used, steps = _continuation(g, mod, phi, lo, hi, settings)
        iterations += used
        extra["continuation_steps"] = steps
        followed_residual = _max_abs(functional.gradient(followed))
        if followed_residual < residual:
            beta, residual = followed, followed_residual

    solution = _finish(
        g, mod, Flavor.SPHERICAL, beta, bd, phi, residual, iterations, settings, extra
    )
    logger.info(
        f"Spherical solve converged: residual={solution.residual:.3e}, "
        f"iterations={solution.iterations}"
    )
    return solution


def solve(
    g: SQuadGraph,
    q: float | Modulus,
    bd: BoundaryData,
    flavor: Flavor,
    settings: SolverSettings | None = None,
    initial: NDArray[np.float64] | None = None,
) -> PatternSolution:
    """Dispatch to the solver of the given flavor."""
    if flavor is Flavor.SPHERICAL:
        return solve_spherical_reduced(g, q, bd, settings, initial)
    return solve_hyperbolic(g, q, bd, settings, initial)
