"""The spherical and hyperbolic ring-pattern functionals."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np
from numpy.typing import NDArray
from scipy import sparse

from ..elliptic import Modulus, as_modulus, kernel_F, kernel_g, kernel_gprime
from ..geometry import Flavor
from ..quadgraph import SQuadGraph
from .boundary import BoundaryData


@dataclass
class PatternSolution:
    """Uniformizing variables (beta or gamma) of a ring pattern."""

    flavor: Flavor
    modulus: Modulus
    graph: SQuadGraph
    values: NDArray[np.float64]
    boundary: BoundaryData | None = None
    phi: NDArray[np.float64] | None = None
    residual: float = float("nan")
    iterations: int = 0
    extra: dict[str, Any] = field(default_factory=dict)

    @property
    def q(self) -> float:
        return self.modulus.q

    def var(self, v: int) -> float:
        """Variable of white vertex v."""
        return float(self.values[self.graph.white_index[v]])

    def as_mapping(self) -> dict[int, float]:
        return {v: float(x) for v, x in zip(self.graph.white_vertices, self.values)}


class RingFunctional:
    """
    Value, gradient and Hessian of the ring functional for fixed Phi.

    Spherical: sum over quads of F(x_i - x_j) - F(x_i + x_j), plus Phi . x.
    Hyperbolic: sum over quads of F(x_i - x_j) + F(x_i + x_j), plus Phi . x.
    Each quad contributes its two white vertices as one pair.
    """

    def __init__(
        self,
        graph: SQuadGraph,
        q: float | Modulus,
        flavor: Flavor,
        phi: NDArray[np.float64],
    ):
        self.graph = graph
        self.modulus = as_modulus(q)
        self.flavor = flavor
        self.phi = np.asarray(phi, dtype=float)
        self.i, self.j = graph.white_pairs
        self.n = len(graph.white_vertices)
        self._sign = -1.0 if flavor is Flavor.SPHERICAL else 1.0

    def value(self, x: NDArray[np.float64]) -> float:
        diff = x[self.i] - x[self.j]
        total = x[self.i] + x[self.j]
        pairs = kernel_F(diff, self.modulus) + self._sign * kernel_F(total, self.modulus)
        return float(np.sum(pairs) + self.phi @ x)

    def gradient(self, x: NDArray[np.float64]) -> NDArray[np.float64]:
        g_diff = kernel_g(x[self.i] - x[self.j], self.modulus)
        g_sum = self._sign * kernel_g(x[self.i] + x[self.j], self.modulus)
        grad = np.bincount(self.i, weights=g_diff + g_sum, minlength=self.n)
        grad += np.bincount(self.j, weights=-g_diff + g_sum, minlength=self.n)
        return np.asarray(grad + self.phi)

    def hessian(self, x: NDArray[np.float64]) -> sparse.csr_matrix:
        a = kernel_gprime(x[self.i] - x[self.j], self.modulus)
        b = self._sign * kernel_gprime(x[self.i] + x[self.j], self.modulus)
        rows = np.concatenate([self.i, self.j, self.i, self.j])
        cols = np.concatenate([self.i, self.j, self.j, self.i])
        data = np.concatenate([a + b, a + b, b - a, b - a])
        return sparse.coo_matrix((data, (rows, cols)), shape=(self.n, self.n)).tocsr()

    def directional_slope(self, x: NDArray[np.float64], t: float) -> float:
        """d/dt of the value at x + t (1, ..., 1)."""
        total = x[self.i] + x[self.j] + 2.0 * t
        return float(
            np.sum(self.phi) + 2.0 * self._sign * np.sum(kernel_g(total, self.modulus))
        )


def interior_residuals(sol: PatternSolution) -> dict[int, float]:
    """Stationarity residual (gradient component) at every interior white vertex."""
    if sol.phi is None:
        raise ValueError("Solution carries no Phi assignment")
    grad = RingFunctional(sol.graph, sol.modulus, sol.flavor, sol.phi).gradient(
        sol.values
    )
    index = sol.graph.white_index
    return {v: float(grad[index[v]]) for v in sol.graph.interior_whites}


def functional_value_grad(
    sol: PatternSolution, phi: NDArray[np.float64]
) -> tuple[float, NDArray[np.float64]]:
    functional = RingFunctional(sol.graph, sol.modulus, sol.flavor, phi)
    return functional.value(sol.values), functional.gradient(sol.values)


def hessian(sol: PatternSolution, phi: NDArray[np.float64] | None = None) -> Any:
    """Analytic Hessian at the solution (independent of Phi)."""
    rhs = np.zeros(len(sol.values)) if phi is None else phi
    return RingFunctional(sol.graph, sol.modulus, sol.flavor, rhs).hessian(sol.values)
