"""Reference quadratures kept independent of the model's numerical kernels."""

import heapq
import math
from collections.abc import Callable
from dataclasses import dataclass
from typing import Literal

import mpmath
import numpy as np
from cachetools import LRUCache, cached
from loguru import logger
from scipy.linalg import eigh_tridiagonal

from ..shared.exceptions import ParameterDomainError

__all__ = (
    "QuadratureResult",
    "QuadratureSpec",
    "gauss_hermite_nodes",
    "precise_eigenfrequencies",
    "quad_adaptive",
)

# 15-point Kronrod extension of the 7-point Gauss-Legendre rule on [-1, 1].
_XGK = np.array(
    [
        0.991455371120812639206854697526329,
        0.949107912342758524526189684047851,
        0.864864423359769072789712788640926,
        0.741531185599394439863864773280788,
        0.586087235467691130294144845693013,
        0.405845151377397166906606412076961,
        0.207784955007898467600689403773245,
        0.000000000000000000000000000000000,
    ]
)
_WGK = np.array(
    [
        0.022935322010529224963732008058970,
        0.063092092629978553290700663189204,
        0.104790010322250183839876322541518,
        0.140653259715525918745189590510238,
        0.169004726639267902826583426598550,
        0.190350578064785409913256402421014,
        0.204432940075298892414161999234649,
        0.209482141084727828012999174891714,
    ]
)
_WG = np.array(
    [
        0.129484966168869693270611432679082,
        0.279705391489276667901467771423780,
        0.381830050505118944950369775488975,
        0.417959183673469387755102040816327,
    ]
)
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_KRONROD = np.concatenate([_WGK[:-1], _WGK[::-1]])
_GAUSS = np.zeros(15)
_GAUSS[[1, 3, 5]] = _WG[:3]
_GAUSS[[13, 11, 9]] = _WG[:3]
_GAUSS[7] = _WG[3]


@dataclass(frozen=True, slots=True)
class QuadratureSpec:
    method: Literal["adaptive", "gauss-hermite"] = "adaptive"
    abs_tol: float = 1e-14
    rel_tol: float = 1e-11
    max_subdivisions: int = 4000
    order: int = 41

    def __post_init__(self):
        if self.method not in ("adaptive", "gauss-hermite"):
            raise ParameterDomainError(f"unknown quadrature method {self.method!r}")
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ParameterDomainError("quadrature tolerances must be > 0")
        if self.max_subdivisions < 1:
            raise ParameterDomainError("max_subdivisions must be >= 1")
        if self.order < 1 or (self.method == "gauss-hermite" and self.order % 2 == 0):
            raise ParameterDomainError("Gauss-Hermite order must be odd and >= 1")


@dataclass(frozen=True, slots=True)
class QuadratureResult:
    value: float
    error: float
    certified: bool
    intervals: int

    def __iter__(self):
        yield self.value
        yield self.error


def _mapped(f: Callable, a: float, b: float) -> tuple[Callable, float, float]:
    """Map an infinite range onto a finite one."""
    if math.isfinite(a) and math.isfinite(b):
        return f, a, b
    if not math.isfinite(a) and not math.isfinite(b):

        def g(t):
            return f(t / (1 - t * t)) * (1 + t * t) / (1 - t * t) ** 2

        return g, -1.0, 1.0
    if math.isfinite(a):

        def g(t):
            return f(a + t / (1 - t)) / (1 - t) ** 2

        return g, 0.0, 1.0

    def g(t):
        return f(b - t / (1 - t)) / (1 - t) ** 2

    return g, 0.0, 1.0


def _panel(f: Callable, lo: float, hi: float) -> tuple[float, float]:
    half = (hi - lo) / 2
    values = np.asarray(f(lo + half + half * _NODES), dtype=float)
    kronrod = half * float(values @ _KRONROD)
    gauss = half * float(values @ _GAUSS)
    return kronrod, abs(kronrod - gauss)


def quad_adaptive(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    spec: QuadratureSpec | None = None,
    points: tuple[float, ...] = (),
) -> QuadratureResult:
    """Globally adaptive Gauss–Kronrod (7/15) quadrature of ``f`` over [a, b].

    ``f`` is called with arrays of 15 abscissae. Infinite limits are mapped
    to finite ones. ``points`` are extra breakpoints for finite ranges. The
    result is not certified when the subdivision budget runs out first.
    """
    spec = spec or QuadratureSpec()
    if a == b:
        return QuadratureResult(0.0, 0.0, True, 0)
    sign = 1.0
    if a > b:
        a, b, sign = b, a, -1.0
    g, lo, hi = _mapped(f, a, b)
    edges = [lo, *sorted(p for p in points if lo < p < hi and g is f), hi]
    heap = []
    total = error = 0.0
    for left, right in zip(edges[:-1], edges[1:], strict=True):
        value, err = _panel(g, left, right)
        total += value
        error += err
        heapq.heappush(heap, (-err, left, right, value))
    while len(heap) < spec.max_subdivisions:
        if error <= max(spec.abs_tol, spec.rel_tol * abs(total)):
            break
        neg_err, left, right, value = heapq.heappop(heap)
        mid = (left + right) / 2
        if not left < mid < right:
            heapq.heappush(heap, (neg_err, left, right, value))
            break
        v1, e1 = _panel(g, left, mid)
        v2, e2 = _panel(g, mid, right)
        total += v1 + v2 - value
        error += e1 + e2 + neg_err
        heapq.heappush(heap, (-e1, left, mid, v1))
        heapq.heappush(heap, (-e2, mid, right, v2))
    # Re-sum to shed the rounding of the running updates.
    total = math.fsum(item[3] for item in heap)
    error = math.fsum(-item[0] for item in heap)
    certified = error <= max(spec.abs_tol, spec.rel_tol * abs(total))
    if not certified:
        logger.debug(f"Quadrature budget exhausted: error {error:.3g} on {len(heap)} panels")
    return QuadratureResult(sign * total, error, certified, len(heap))


@cached(LRUCache(maxsize=32))
def _golub_welsch(order: int) -> tuple[np.ndarray, np.ndarray]:
    off = np.sqrt(np.arange(1, order) / 2.0)
    nodes, vectors = eigh_tridiagonal(np.zeros(order), off)
    weights = math.sqrt(math.pi) * vectors[0, :] ** 2
    nodes.flags.writeable = False
    weights.flags.writeable = False
    return nodes, weights


def gauss_hermite_nodes(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights for ∫e^{−x²}f(x)dx from the Jacobi matrix eigenproblem."""
    if isinstance(order, bool) or not isinstance(order, int) or order < 1:
        raise ParameterDomainError(f"order must be an integer >= 1, got {order!r}")
    if order == 1:
        return np.array([0.0]), np.array([math.sqrt(math.pi)])
    return _golub_welsch(order)


def precise_eigenfrequencies(
    omega_x: complex, omega_a: complex, g: float, dps: int = 50
) -> tuple[complex, complex]:
    """Eigenvalues of [[ω_X, g], [g, ω_a]] at ``dps`` decimal digits.

    The first returned value is the one continuously connected to ω_X.
    """
    with mpmath.workdps(dps):
        matrix = mpmath.matrix([[mpmath.mpc(omega_x), g], [g, mpmath.mpc(omega_a)]])
        values = mpmath.eig(matrix, left=False, right=False)
        first, second = sorted(values, key=lambda v: abs(v - mpmath.mpc(omega_x)))
        return complex(first), complex(second)
