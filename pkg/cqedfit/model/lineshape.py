"""Normalised lineshapes and the uniform-grid convolution engine.

Curves carry no units. Energy-domain callers pass µeV, time-domain callers ns.
"""

import math
from dataclasses import dataclass
from typing import Self

import numpy as np
from cachetools import LRUCache, cached
from scipy import signal
from scipy.integrate import trapezoid

from ..shared.constants import (
    DIRECT_CONVOLUTION_MAX,
    GAUSS_HERMITE_ORDER,
    GAUSSIAN_SPAN_SIGMAS,
    GAUSSIAN_STEP_PER_WIDTH,
    VOIGT_EXTENT_WIDTHS,
    VOIGT_MIN_POINTS,
)
from ..shared.exceptions import ParameterDomainError, PreconditionError

__all__ = (
    "GridSpec",
    "SampledCurve",
    "convolve_uniform",
    "gaussian_eval",
    "gaussian_nodes",
    "lorentzian_eval",
    "voigt_eval",
    "voigt_fwhm",
)

_STEP_RTOL = 1e-12
_VOIGT_CHUNK = 256
# Gaussian tails beyond this many sigmas carry less than 1e-30 of the mass.
_VOIGT_GAUSS_SIGMAS = 12.0


@dataclass(frozen=True, slots=True)
class GridSpec:
    start: float
    step: float
    n: int

    def __post_init__(self):
        if not (math.isfinite(self.start) and math.isfinite(self.step)):
            raise ParameterDomainError("grid start and step must be finite")
        if self.step <= 0:
            raise ParameterDomainError(f"grid step must be > 0, got {self.step}")
        if self.n < 1:
            raise ParameterDomainError(f"grid needs at least one point, got {self.n}")

    @classmethod
    def centered(cls, center: float, half_width: float, step: float) -> Self:
        half = int(math.ceil(half_width / step - 1e-9))
        return cls(center - half * step, step, 2 * half + 1)

    @classmethod
    def spanning(cls, start: float, stop: float, step: float) -> Self:
        if stop < start:
            raise ParameterDomainError("grid stop must be >= start")
        return cls(start, step, int(math.floor((stop - start) / step + 1e-9)) + 1)

    @classmethod
    def from_axis(cls, axis: np.ndarray) -> Self:
        axis = np.asarray(axis, dtype=float)
        if axis.size == 1:
            raise PreconditionError("cannot infer a grid step from a single point")
        steps = np.diff(axis)
        step = float(np.mean(steps))
        if step <= 0 or np.max(np.abs(steps - step)) > 1e-6 * abs(step):
            raise PreconditionError("axis is not uniform and ascending")
        return cls(float(axis[0]), step, axis.size)

    @property
    def stop(self) -> float:
        return self.start + (self.n - 1) * self.step

    @property
    def axis(self) -> np.ndarray:
        return self.start + self.step * np.arange(self.n)


@dataclass(frozen=True, slots=True, eq=False)
class SampledCurve:
    start: float
    step: float
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 1 or values.size == 0:
            raise ParameterDomainError("curve values must be a non-empty sequence")
        if not np.all(np.isfinite(values)):
            raise ParameterDomainError("curve values must be finite")
        if not (math.isfinite(self.step) and self.step > 0):
            raise ParameterDomainError(f"curve step must be > 0, got {self.step}")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @classmethod
    def on(cls, grid: GridSpec, values) -> Self:
        return cls(grid.start, grid.step, values)

    @property
    def grid(self) -> GridSpec:
        return GridSpec(self.start, self.step, self.values.size)

    @property
    def axis(self) -> np.ndarray:
        return self.start + self.step * np.arange(self.values.size)

    def __len__(self) -> int:
        return self.values.size

    def integral(self) -> float:
        """Trapezoid integral over the sampled range."""
        if self.values.size == 1:
            return 0.0
        return float(trapezoid(self.values, dx=self.step))

    def riemann_sum(self) -> float:
        return float(np.sum(self.values) * self.step)

    def scaled(self, factor: float) -> Self:
        return type(self)(self.start, self.step, self.values * factor)

    def normalized(self) -> Self:
        total = self.integral()
        if total == 0:
            raise PreconditionError("cannot normalise a curve with zero integral")
        return self.scaled(1.0 / total)

    def resample(self, axis: np.ndarray) -> np.ndarray:
        """Linear interpolation onto ``axis``; zero outside the sampled range."""
        return np.interp(axis, self.axis, self.values, left=0.0, right=0.0)


def _require_positive(name: str, value: float) -> None:
    if not (math.isfinite(value) and value > 0):
        raise ParameterDomainError(f"{name} must be > 0, got {value!r}")


def lorentzian_eval(omega, gamma_w: float, omega0: float = 0.0):
    """Unit-area Lorentzian with full width ``gamma_w``."""
    _require_positive("gamma_w", gamma_w)
    x = (np.asarray(omega, dtype=float) - omega0) / (gamma_w / 2)
    return (2.0 / (np.pi * gamma_w)) / (1.0 + x * x)


def gaussian_eval(omega, sigma: float, omega0: float = 0.0):
    _require_positive("sigma", sigma)
    x = (np.asarray(omega, dtype=float) - omega0) / sigma
    return np.exp(-0.5 * x * x) / (math.sqrt(2 * math.pi) * sigma)


def _lorentzian_cdf(x, gamma_w: float):
    return np.arctan(2.0 * x / gamma_w) / np.pi


def voigt_eval(
    omega,
    gamma_w: float,
    sigma: float,
    omega0: float = 0.0,
    n_points: int = VOIGT_MIN_POINTS,
):
    """Lorentzian ⋆ Gaussian by trapezoid quadrature over the Gaussian variable.

    The grid spans ±min(25·(Γ+σ), 12σ) with at least 4001 points. If Γ is
    narrower than eight grid steps the Lorentzian factor is integrated
    exactly over each cell and the Gaussian taken at the cell centre.
    """
    _require_positive("gamma_w", gamma_w)
    if not (math.isfinite(sigma) and sigma >= 0):
        raise ParameterDomainError(f"sigma must be >= 0, got {sigma!r}")
    if sigma == 0:
        return lorentzian_eval(omega, gamma_w, omega0)
    n = max(int(n_points), VOIGT_MIN_POINTS)
    n += 1 - n % 2
    extent = min(VOIGT_EXTENT_WIDTHS * (gamma_w + sigma), _VOIGT_GAUSS_SIGMAS * sigma)
    u = np.linspace(-extent, extent, n)
    h = u[1] - u[0]
    g = gaussian_eval(u, sigma)
    x = np.atleast_1d(np.asarray(omega, dtype=float)) - omega0
    out = np.empty_like(x)
    resolved = gamma_w >= 8 * h
    for lo in range(0, x.size, _VOIGT_CHUNK):
        xs = x[lo : lo + _VOIGT_CHUNK, None] - u[None, :]
        if resolved:
            out[lo : lo + _VOIGT_CHUNK] = trapezoid(
                lorentzian_eval(xs, gamma_w) * g, dx=h, axis=1
            )
        else:
            mass = _lorentzian_cdf(xs + h / 2, gamma_w) - _lorentzian_cdf(
                xs - h / 2, gamma_w
            )
            out[lo : lo + _VOIGT_CHUNK] = mass @ g
    if np.ndim(omega) == 0:
        return float(out[0])
    return out.reshape(np.shape(omega))


def voigt_fwhm(gamma_w: float, sigma: float) -> float:
    """Approximate Voigt FWHM (Olivero–Longbothum, about 0.02 % accurate)."""
    f_l = gamma_w
    f_g = 2 * math.sqrt(2 * math.log(2)) * sigma
    return 0.5346 * f_l + math.sqrt(0.2166 * f_l * f_l + f_g * f_g)


def convolve_uniform(a: SampledCurve, b: SampledCurve) -> SampledCurve:
    """Riemann approximation of the continuous convolution a ⋆ b."""
    if abs(a.step - b.step) > _STEP_RTOL * max(a.step, b.step):
        raise PreconditionError(
            f"convolution needs equal grid steps, got {a.step} and {b.step}"
        )
    if min(a.values.size, b.values.size) < DIRECT_CONVOLUTION_MAX:
        values = np.convolve(a.values, b.values)
    else:
        values = signal.fftconvolve(a.values, b.values)
    return SampledCurve(a.start + b.start, a.step, values * a.step)


@cached(LRUCache(maxsize=32))
def _hermgauss(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.hermite.hermgauss(order)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def gaussian_nodes(
    mean: float,
    sigma: float,
    resolve_width: float,
    order: int = GAUSS_HERMITE_ORDER,
) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights for E[f(X)] with X ~ N(mean, sigma²).

    Gauss–Hermite is used while its node spacing (about σ/2 at 41 nodes) is at
    most a quarter of ``resolve_width``. Wider Gaussians fall back to a
    uniform rule over ±6σ with a step of a quarter of that width.
    Weights sum to one.
    """
    if sigma < 0 or not math.isfinite(sigma):
        raise ParameterDomainError(f"sigma must be >= 0, got {sigma!r}")
    if sigma == 0:
        return np.array([float(mean)]), np.array([1.0])
    x, w = _hermgauss(order)
    spacing = math.sqrt(2.0) * sigma * float(np.min(np.diff(x)))
    if resolve_width <= 0 or spacing <= resolve_width / 4:
        return mean + math.sqrt(2.0) * sigma * x, w / math.sqrt(math.pi)
    step = GAUSSIAN_STEP_PER_WIDTH * resolve_width
    half = int(math.ceil(GAUSSIAN_SPAN_SIGMAS * sigma / step))
    nodes = mean + step * np.arange(-half, half + 1)
    weights = gaussian_eval(nodes, sigma, mean)
    return nodes, weights / weights.sum()
