"""Unit tests for the ring-pattern functionals and boundary data."""

import math

import numpy as np
import pytest

from src.core.exceptions import DomainError
from src.elliptic import Modulus
from src.geometry import Flavor
from src.quadgraph import white_neighbors
from src.ringpattern import (
    NEGATIVE,
    POSITIVE,
    BoundaryKind,
    RingFunctional,
    dirichlet_boundary,
    interior_residuals,
    orientation_from_angles,
    phi_assignment,
    rectangle_boundary,
)

FLAVORS = [Flavor.SPHERICAL, Flavor.HYPERBOLIC]


@pytest.fixture
def random_point(rectangle_3x3):
    """Variables strictly inside (0, 2K) for q = 0.9."""
    rng = np.random.default_rng(7)
    K = Modulus(0.9).K
    return rng.uniform(0.2 * K, 1.8 * K, len(rectangle_3x3.white_vertices))


def _functional(g, flavor):
    bd = rectangle_boundary(g, math.pi, (math.pi / 2,) * 4)
    return RingFunctional(g, 0.9, flavor, phi_assignment(g, bd, flavor))


class TestRingFunctional:
    """Test cases for value, gradient and Hessian."""

    @pytest.mark.parametrize("flavor", FLAVORS)
    def test_gradient_matches_finite_differences(self, rectangle_3x3, random_point, flavor):
        """Test the analytic gradient against central differences of the value."""
        functional = _functional(rectangle_3x3, flavor)
        h = 1e-6
        numeric = np.array(
            [
                (
                    functional.value(random_point + h * e)
                    - functional.value(random_point - h * e)
                )
                / (2 * h)
                for e in np.eye(len(random_point))
            ]
        )
        np.testing.assert_allclose(functional.gradient(random_point), numeric, atol=1e-6)

    @pytest.mark.parametrize("flavor", FLAVORS)
    def test_hessian_matches_finite_differences(self, rectangle_3x3, random_point, flavor):
        """Test the sparse Hessian against differences of the gradient."""
        functional = _functional(rectangle_3x3, flavor)
        h = 1e-6
        numeric = np.column_stack(
            [
                (
                    functional.gradient(random_point + h * e)
                    - functional.gradient(random_point - h * e)
                )
                / (2 * h)
                for e in np.eye(len(random_point))
            ]
        )
        H = functional.hessian(random_point).toarray()
        np.testing.assert_allclose(H, H.T, atol=1e-14)
        np.testing.assert_allclose(H, numeric, atol=1e-6)

    def test_hyperbolic_hessian_is_positive_semidefinite(self, rectangle_3x3, random_point):
        """Test convexity of the hyperbolic functional."""
        H = _functional(rectangle_3x3, Flavor.HYPERBOLIC).hessian(random_point).toarray()
        assert np.min(np.linalg.eigvalsh(H)) > -1e-12

    @pytest.mark.parametrize("seed", range(5))
    def test_hyperbolic_hessian_psd_on_4x4(self, rectangle_4x4, seed):
        """Test convexity at random feasible points of a 4 x 4 rectangle."""
        rng = np.random.default_rng(seed)
        K = Modulus(0.9).K
        x = rng.uniform(0.05 * K, 1.95 * K, len(rectangle_4x4.white_vertices))
        H = _functional(rectangle_4x4, Flavor.HYPERBOLIC).hessian(x).toarray()
        assert np.min(np.linalg.eigvalsh(H)) >= -1e-9

    def test_spherical_hessian_is_indefinite_along_ones(self, rectangle_3x3):
        """Test negative curvature of the spherical functional along (1, ..., 1)."""
        K = Modulus(0.9).K
        x = np.full(len(rectangle_3x3.white_vertices), K)
        H = _functional(rectangle_3x3, Flavor.SPHERICAL).hessian(x).toarray()
        ones = np.ones(len(x))
        assert ones @ H @ ones < 0

    @pytest.mark.parametrize("flavor", FLAVORS)
    def test_directional_slope(self, rectangle_3x3, random_point, flavor):
        """Test the slope along (1, ..., 1) against a difference quotient."""
        functional = _functional(rectangle_3x3, flavor)
        ones = np.ones(len(random_point))
        h = 1e-6
        numeric = (
            functional.value(random_point + h * ones)
            - functional.value(random_point - h * ones)
        ) / (2 * h)
        assert functional.directional_slope(random_point, 0.0) == pytest.approx(
            numeric, abs=1e-5
        )


class TestPhiAssignment:
    """Test cases for the per-vertex right-hand sides."""

    def test_spherical_positive(self, rectangle_3x3):
        """Test 2pi inside, pi n - angle on the boundary."""
        g = rectangle_3x3
        bd = rectangle_boundary(g, math.pi, (2 * math.pi / 3,) * 4)
        phi = phi_assignment(g, bd, Flavor.SPHERICAL)
        index = g.white_index
        for v in g.interior_whites:
            assert phi[index[v]] == pytest.approx(2 * math.pi)
        for v in g.corners:
            assert phi[index[v]] == pytest.approx(math.pi - 2 * math.pi / 3)
        sides = [v for v in g.boundary_whites if v not in g.corners]
        for v in sides:
            assert phi[index[v]] == pytest.approx(math.pi)

    def test_hyperbolic_orientations(self, rectangle_3x3):
        """Test the three hyperbolic boundary cases."""
        g = rectangle_3x3
        corner = g.corners[0]
        side = next(v for v in g.boundary_whites if v not in g.corners)
        orientation = {v: 1 for v in g.boundary_whites}
        orientation[corner] = -1
        orientation[side] = -1
        bd = rectangle_boundary(g, math.pi, (math.pi / 2,) * 4, orientation=orientation)
        phi = phi_assignment(g, bd, Flavor.HYPERBOLIC)
        index = g.white_index
        assert phi[index[corner]] == pytest.approx(-math.pi / 2 - math.pi)
        assert phi[index[side]] == pytest.approx(-math.pi - 2 * math.pi)
        assert phi[index[g.corners[1]]] == pytest.approx(-math.pi / 2)
        for v in g.interior_whites:
            assert phi[index[v]] == pytest.approx(-2 * math.pi)

    def test_spherical_negative(self, rectangle_3x3):
        """Test -angle on negatively oriented spherical boundary rings."""
        g = rectangle_3x3
        orientation = {v: -1 for v in g.boundary_whites}
        bd = rectangle_boundary(g, math.pi, (math.pi / 2,) * 4, orientation=orientation)
        phi = phi_assignment(g, bd, Flavor.SPHERICAL)
        assert phi[g.white_index[g.corners[2]]] == pytest.approx(-math.pi / 2)

    def test_dirichlet_vertices_get_zero(self, rectangle_3x3):
        """Test that fixed vertices carry no right-hand side."""
        g = rectangle_3x3
        phi = phi_assignment(g, dirichlet_boundary(g, 1.0), Flavor.HYPERBOLIC)
        for v in g.boundary_whites:
            assert phi[g.white_index[v]] == 0.0


class TestBoundaryData:
    """Test cases for boundary data construction and validation."""

    def test_rectangle_boundary(self, rectangle_3x3):
        """Test sides, corners and overrides."""
        g = rectangle_3x3
        side = next(v for v in g.boundary_whites if v not in g.corners)
        bd = rectangle_boundary(g, math.pi, (0.1, 0.2, 0.3, 0.4), overrides={side: 2.0})
        assert bd.kind is BoundaryKind.NEUMANN
        assert [bd.angles[v] for v in g.corners] == [0.1, 0.2, 0.3, 0.4]
        assert bd.angles[side] == 2.0
        assert bd.sign(side) == 1

    def test_wrong_corner_count(self, rectangle_3x3):
        """Test that corner angles must match the corners."""
        with pytest.raises(DomainError):
            rectangle_boundary(rectangle_3x3, math.pi, (math.pi / 2,) * 3)

    def test_corner_angle_too_large(self, rectangle_3x3):
        """Test rejection of corner angles of absolute value pi or more."""
        bd = rectangle_boundary(rectangle_3x3, math.pi, (math.pi,) * 4)
        with pytest.raises(DomainError):
            bd.validate(rectangle_3x3, 0.9)

    def test_missing_angle(self, rectangle_3x3):
        """Test that every boundary white vertex needs an angle."""
        bd = rectangle_boundary(rectangle_3x3)
        angles = dict(bd.angles)
        angles.pop(rectangle_3x3.corners[0])
        broken = type(bd)(bd.kind, angles=angles)
        with pytest.raises(DomainError):
            broken.validate(rectangle_3x3, 0.9)

    def test_dirichlet_value_outside_box(self, rectangle_3x3):
        """Test that Dirichlet values must lie in [0, 2K]."""
        bd = dirichlet_boundary(rectangle_3x3, 3 * Modulus(0.9).K)
        with pytest.raises(DomainError):
            bd.validate(rectangle_3x3, 0.9)


class TestInteriorResiduals:
    """Test cases for stationarity residuals of solutions."""

    def test_solution_is_stationary(self, hyperbolic_solution):
        """Test that solved interiors have vanishing gradient."""
        residuals = interior_residuals(hyperbolic_solution)
        assert set(residuals) == set(hyperbolic_solution.graph.interior_whites)
        assert max(abs(r) for r in residuals.values()) < 1e-9


class TestOrientationFromAngles:
    """Test cases for orienting boundary rings by their angles."""

    def test_signs_follow_angles(self, rectangle_3x3):
        """Test negative orientation exactly where the angle is negative."""
        g = rectangle_3x3
        side = next(v for v in g.boundary_whites if v not in g.corners)
        bd = rectangle_boundary(
            g,
            math.pi,
            (math.pi / 2, -math.pi / 3, math.pi / 2, math.pi / 2),
            overrides={side: -math.pi / 2},
        )
        oriented = orientation_from_angles(g, bd)
        negative = {v for v, s in oriented.orientation.items() if s == NEGATIVE}
        assert negative == {g.corners[1], side}
        assert oriented.sign(g.corners[0]) == POSITIVE
        assert set(oriented.orientation) == set(g.boundary_whites)

    def test_given_orientation_kept(self, rectangle_3x3):
        """Test that explicit orientations are not replaced."""
        g = rectangle_3x3
        orientation = {v: NEGATIVE for v in g.boundary_whites}
        bd = rectangle_boundary(g, math.pi, (math.pi / 2,) * 4, orientation=orientation)
        assert orientation_from_angles(g, bd) is bd

    def test_dirichlet_unchanged(self, rectangle_3x3):
        """Test that Dirichlet data carries no orientation."""
        bd = dirichlet_boundary(rectangle_3x3, 1.0)
        assert orientation_from_angles(rectangle_3x3, bd).orientation is None

    @pytest.mark.parametrize("flavor", FLAVORS)
    def test_kite_angles_bound_the_boundary_equation(self, rectangle_3x3, random_point, flavor):
        """Test that boundary gradients keep the sign structure of the kite angles."""
        g = rectangle_3x3
        zero = RingFunctional(g, 0.9, flavor, np.zeros(len(g.white_vertices)))
        grad = zero.gradient(random_point)
        for v in g.boundary_whites:
            n = len(white_neighbors(g, v))
            value = grad[g.white_index[v]]
            # spherical components are minus the kite angle sum, hyperbolic ones plus
            total = -value if flavor is Flavor.SPHERICAL else value
            assert 0.0 <= total <= n * math.pi
