"""
Performance benchmarks for the construction stages.

These measure the kernels and stages that dominate a pipeline run so
regressions show up before they reach larger graphs.
"""

import math

import numpy as np
import pytest

pytest.importorskip("pytest_benchmark")

from src.cmc import cmc_radii, curvatures, integrate_one_forms  # noqa: E402
from src.elliptic import jacobi, kernel_F, kernel_g  # noqa: E402
from src.geometry import Flavor  # noqa: E402
from src.koebe import lift  # noqa: E402
from src.layout import embed  # noqa: E402
from src.quadgraph import build_rectangle, validate  # noqa: E402
from src.ringpattern import rectangle_boundary, solve  # noqa: E402

pytestmark = pytest.mark.benchmark


class TestKernelBenchmarks:
    """Elliptic kernels evaluated on large arrays."""

    @pytest.fixture
    def grid(self):
        return np.linspace(0.01, 3.0, 100_000)

    def test_jacobi_performance(self, grid, benchmark):
        """Benchmark sn, cn, dn."""
        result = benchmark(jacobi, grid, 0.9)
        assert result.sn.shape == grid.shape

    def test_kernel_g_performance(self, grid, benchmark):
        """Benchmark the ring kernel."""
        result = benchmark(kernel_g, grid, 0.9)
        assert np.all(np.isfinite(result))

    def test_kernel_F_performance(self, grid, benchmark):
        """Benchmark the kernel antiderivative."""
        result = benchmark(kernel_F, grid, 0.9)
        assert np.all(np.isfinite(result))


class TestStageBenchmarks:
    """Pipeline stages on an 8 x 8 rectangle."""

    @pytest.fixture(scope="class")
    def graph(self):
        return build_rectangle(8, 8)

    @pytest.fixture(scope="class")
    def solution(self, graph):
        bd = rectangle_boundary(graph, math.pi, (2 * math.pi / 3,) * 4)
        return solve(graph, 0.9, bd, Flavor.SPHERICAL)

    def test_validate_performance(self, graph, benchmark):
        """Benchmark graph validation."""
        assert benchmark(validate, graph) == []

    def test_spherical_solve_performance(self, graph, benchmark):
        """Benchmark the reduced spherical solver."""
        bd = rectangle_boundary(graph, math.pi, (2 * math.pi / 3,) * 4)
        sol = benchmark(solve, graph, 0.9, bd, Flavor.SPHERICAL)
        assert sol.residual <= 1e-8

    def test_embed_performance(self, solution, benchmark):
        """Benchmark the layout with polishing."""
        pat = benchmark(embed, solution)
        assert pat.residual <= 1e-7

    def test_build_performance(self, solution, benchmark):
        """Benchmark lifting, integration and curvatures together."""
        pat = embed(solution)

        def build():
            kp = lift(pat)
            return curvatures(integrate_one_forms(kp, cmc_radii(solution)))

        report = benchmark(build)
        assert report.mean_curvature_deviation < 1e-6
