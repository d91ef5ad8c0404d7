"""
Jacobi elliptic functions of real argument and the ring-pattern kernels.

The modulus convention is q (the parameter is m = q**2), so that
dn(x, q)**2 + q**2 sn(x, q)**2 = 1. At q = 1 the functions degenerate to
tanh, sech, sech and the real quarter period K is infinite.

Functions accept scalars or numpy arrays and return the same kind.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, NamedTuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from numpy.typing import ArrayLike, NDArray
from scipy import integrate

from .caching import KernelCache
from .core.exceptions import DomainError

_EPS = float(np.finfo(float).eps)
_MAX_AGM_STEPS = 64
_GL_NODES, _GL_WEIGHTS = leggauss(16)
_PANEL_WIDTH = 0.25
_MIN_PANELS = 64

_kernel_cache = KernelCache(max_size=128)


def _check_q(q: float) -> None:
    if not math.isfinite(q) or q <= 0.0 or q > 1.0:
        raise DomainError(f"Modulus q must lie in (0, 1], got {q!r}", parameter="q", value=q)


def _complementary(q: float) -> float:
    return math.sqrt((1.0 - q) * (1.0 + q))


def _agm(a: float, b: float) -> float:
    for _ in range(_MAX_AGM_STEPS):
        if abs(a - b) <= _EPS * a:
            break
        a, b = 0.5 * (a + b), math.sqrt(a * b)
    return a


def quarter_periods(q: float) -> tuple[float, float]:
    """
    Real and imaginary quarter periods K(q), K'(q).

    Args:
        q: Modulus in (0, 1]

    Returns:
        (K, K'); K is ``math.inf`` at q = 1
    """
    _check_q(q)
    if q == 1.0:
        return math.inf, math.pi / 2
    K = math.pi / (2.0 * _agm(1.0, _complementary(q)))
    Kprime = math.pi / (2.0 * _agm(1.0, q))
    return K, Kprime


@dataclass(frozen=True)
class Modulus:
    """Elliptic modulus q with its quarter periods."""

    q: float
    K: float = field(init=False)
    Kprime: float = field(init=False)
    qprime: float = field(init=False, repr=False)

    def __post_init__(self) -> None:
        q = float(self.q)
        K, Kprime = quarter_periods(q)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "Kprime", Kprime)
        object.__setattr__(self, "qprime", _complementary(q))

    @property
    def k2(self) -> float:
        """Parameter m = q**2."""
        return self.q * self.q

    @property
    def degenerate(self) -> bool:
        """True at q = 1, where the functions become hyperbolic."""
        return self.q == 1.0


def as_modulus(q: float | Modulus) -> Modulus:
    """Coerce a float or Modulus to a Modulus."""
    return q if isinstance(q, Modulus) else Modulus(float(q))


class JacobiTriple(NamedTuple):
    """Values (sn, cn, dn) at one argument, or arrays of them."""

    sn: Any
    cn: Any
    dn: Any


def _shape_like(value: NDArray[np.float64], like: ArrayLike) -> Any:
    if np.ndim(like) == 0:
        return float(value)
    return value


def _landen_sequence(mod: Modulus) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """AGM sequences a_n, c_n seeding the descending Landen recursion."""

    def build() -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        a, b, c = [1.0], [mod.qprime], [mod.q]
        while abs(c[-1]) > _EPS * a[-1] and len(a) < _MAX_AGM_STEPS:
            a_n, b_n = a[-1], b[-1]
            a.append(0.5 * (a_n + b_n))
            b.append(math.sqrt(a_n * b_n))
            c.append(0.5 * (a_n - b_n))
        return np.array(a), np.array(c)

    return _kernel_cache.get_or_compute(("landen", mod.q), build)


def jacobi(x: ArrayLike, q: float | Modulus) -> JacobiTriple:
    """
    Jacobi elliptic functions sn, cn, dn of real argument.

    Uses the descending Landen transformation seeded by the AGM; dn is
    recovered as sqrt(cn**2 + q'**2 sn**2), which is cancellation free and
    positive for real arguments.
    """
    mod = as_modulus(q)
    xs = np.asarray(x, dtype=float)

    if mod.degenerate:
        with np.errstate(over="ignore"):
            sech = 1.0 / np.cosh(xs)
        tanh = np.tanh(xs)
        return JacobiTriple(
            _shape_like(tanh, x), _shape_like(sech, x), _shape_like(sech, x)
        )

    a, c = _landen_sequence(mod)
    n_steps = len(a) - 1
    phi = (2.0**n_steps) * a[n_steps] * xs
    for n in range(n_steps, 0, -1):
        phi = 0.5 * (phi + np.arcsin(np.clip(c[n] / a[n] * np.sin(phi), -1.0, 1.0)))

    sn = np.sin(phi)
    cn = np.cos(phi)
    dn = np.sqrt(cn * cn + (mod.qprime * sn) ** 2)
    return JacobiTriple(_shape_like(sn, x), _shape_like(cn, x), _shape_like(dn, x))


def _g_quarter(w: NDArray[np.float64], mod: Modulus) -> NDArray[np.float64]:
    # w in [0, 2K]: sn, cn, dn of w/2 are all nonnegative here
    sn, cn, dn = jacobi(0.5 * w, mod)
    return np.arctan2((1.0 + mod.q) * sn, cn * dn)


def _g_half(u: NDArray[np.float64], mod: Modulus) -> NDArray[np.float64]:
    # u in [0, 4K], g(4K - u) = pi - g(u)
    first = u <= 2.0 * mod.K
    w = np.where(first, u, 4.0 * mod.K - u)
    base = _g_quarter(w, mod)
    return np.where(first, base, math.pi - base)


def kernel_g(x: ArrayLike, q: float | Modulus) -> Any:
    """
    The kernel g(x) = arctan[(1+q) sn(x/2) / (cn(x/2) dn(x/2))].

    The branch is the continuous, strictly increasing one with g(0) = 0,
    g(2K) = pi/2 and g(4K) = pi. It is extended to all reals as an odd
    function with g(x + 8K) = g(x) + 2 pi. At q = 1 it is the
    Gudermannian arctan(sinh x).
    """
    mod = as_modulus(q)
    xs = np.asarray(x, dtype=float)

    if mod.degenerate:
        with np.errstate(over="ignore"):
            return _shape_like(np.arctan(np.sinh(xs)), x)

    period = 8.0 * mod.K
    turns = np.floor(xs / period)
    y = xs - turns * period
    lower = y <= 4.0 * mod.K
    u = np.where(lower, y, period - y)
    h = _g_half(u, mod)
    value = np.where(lower, h, 2.0 * math.pi - h) + 2.0 * math.pi * turns
    return _shape_like(value, x)


def kernel_gprime(x: ArrayLike, q: float | Modulus) -> Any:
    """Derivative g'(x) = (dn x + q cn x) / 2, positive for real x."""
    mod = as_modulus(q)
    xs = np.asarray(x, dtype=float)
    if mod.degenerate:
        with np.errstate(over="ignore"):
            return _shape_like(1.0 / np.cosh(xs), x)
    _, cn, dn = jacobi(xs, mod)
    return _shape_like(0.5 * (dn + mod.q * cn), x)


def _antiderivative_table(mod: Modulus) -> tuple[float, NDArray[np.float64]]:
    """Values of F at equispaced nodes on [0, 4K] (composite Gauss-Legendre)."""

    def build() -> tuple[float, NDArray[np.float64]]:
        span = 4.0 * mod.K
        panels = max(_MIN_PANELS, math.ceil(span / _PANEL_WIDTH))
        h = span / panels
        left = h * np.arange(panels)
        points = left[:, None] + 0.5 * h * (_GL_NODES[None, :] + 1.0)
        integrals = 0.5 * h * (kernel_g(points, mod) @ _GL_WEIGHTS)
        table = np.concatenate(([0.0], np.cumsum(integrals)))
        return h, table

    return _kernel_cache.get_or_compute(("antiderivative", mod.q), build)


def _gudermannian_integral(a: float) -> float:
    value, _ = integrate.quad(
        lambda u: math.atan(math.sinh(u)), 0.0, a, epsabs=1e-13, epsrel=1e-13
    )
    return value


def kernel_F(x: ArrayLike, q: float | Modulus) -> Any:
    """
    Antiderivative F(x) = integral of g from 0 to x.

    F is even since g is odd. Defined on [-4K, 4K]; evaluated from a cached
    per-q node table plus a short Gauss-Legendre integral from the nearest
    node.
    """
    mod = as_modulus(q)
    xs = np.asarray(x, dtype=float)
    a = np.abs(xs)

    if mod.degenerate:
        flat = np.array([_gudermannian_integral(float(v)) for v in a.ravel()])
        return _shape_like(flat.reshape(a.shape), x)

    limit = 4.0 * mod.K
    if np.any(a > limit * (1.0 + 1e-12) + 1e-12):
        worst = float(np.max(a))
        raise DomainError(
            f"F is defined on [-4K, 4K] = [-{limit:.6g}, {limit:.6g}], got |x| = {worst:.6g}",
            parameter="x",
            value=worst,
        )

    h, table = _antiderivative_table(mod)
    a = np.minimum(a, limit)
    node = np.clip(np.rint(a / h).astype(int), 0, len(table) - 1)
    base = node * h
    width = a - base
    points = base[..., None] + 0.5 * width[..., None] * (_GL_NODES + 1.0)
    correction = 0.5 * width * (kernel_g(points, mod) @ _GL_WEIGHTS)
    return _shape_like(table[node] + correction, x)


def cache_stats() -> dict[str, Any]:
    """Statistics of the shared kernel cache."""
    return _kernel_cache.get_stats()
