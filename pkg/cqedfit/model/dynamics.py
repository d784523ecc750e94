"""Time-resolved photoluminescence models.

Times are in ns and rates in ns⁻¹; detunings δ = ω_X − ω_a are in µeV.
"""

import math
from dataclasses import dataclass
from typing import Self

import numpy as np
from loguru import logger
from scipy.optimize import brentq

from ..shared.constants import (
    EFFECTIVE_EXP_MAX_ITER,
    EFFECTIVE_EXP_SCAN_POINTS,
    GAUSS_HERMITE_ORDER,
    TIME_SPAN_AFTER_NS,
    TIME_SPAN_BEFORE_NS,
    TIME_STEP_NS,
)
from ..shared.exceptions import ConvergenceError, ParameterDomainError, PreconditionError
from .lineshape import GridSpec, SampledCurve, convolve_uniform, gaussian_eval, gaussian_nodes
from .quantities import (
    CavityParams,
    EmitterParams,
    SubsystemParams,
    _check,
    _check_real,
    energy_to_rate,
    rate_to_energy,
    sigma_from_fwhm,
)

__all__ = (
    "DecayModelParams",
    "IrfKernel",
    "acceleration_zeta",
    "coupling_rate_R",
    "decay_components",
    "decay_detuning_averaged",
    "decay_instantaneous",
    "decay_model_cavity",
    "decay_model_freespace",
    "default_time_grid",
    "double_exponential_ratio",
    "effective_decay_rate",
    "effective_rate_large_modulation",
    "effective_single_exponential",
    "efficiency_beta_delta",
    "gaussian_irf",
    "storage_kernel",
)

_RATE_CHUNK = 512
# Storage kernels are cut once e^{-κt} has dropped below e^{-40}.
_STORAGE_SPAN_RATES = 40.0
_IRF_ONSET_FRACTION = 0.1
_IRF_ONSET_GUARD = 5


@dataclass(frozen=True, slots=True)
class DecayModelParams:
    emitter: EmitterParams
    cavity: CavityParams
    g: float
    a_long: float = 0.0
    gamma_long: float = 0.0
    t0: float = 0.0
    background: float = 0.0

    def __post_init__(self):
        _check("g", self.g)
        _check("a_long", self.a_long)
        _check("gamma_long", self.gamma_long)
        _check_real("t0", self.t0)
        _check_real("background", self.background)


@dataclass(frozen=True, slots=True)
class IrfKernel:
    """Instrument response on its own time grid, with Σ values·step = 1."""

    curve: SampledCurve

    def __post_init__(self):
        if np.any(self.curve.values < 0):
            raise PreconditionError("IRF values must be nonnegative")
        if abs(self.curve.riemann_sum() - 1.0) > 1e-6:
            raise PreconditionError(
                f"IRF must be normalised, grid integral is {self.curve.riemann_sum():.6g}"
            )

    @property
    def step(self) -> float:
        return self.curve.step

    @classmethod
    def impulse(cls, step: float) -> Self:
        return cls(SampledCurve(0.0, step, [1.0 / step]))

    @classmethod
    def from_histogram(cls, times, counts) -> Self:
        """Background-subtract, clip and normalise a measured IRF histogram.

        The background is the mean of the bins before the rising edge (first
        bin above 10 % of the peak, less five bins of margin).
        """
        grid = GridSpec.from_axis(times)
        counts = np.asarray(counts, dtype=float)
        if counts.shape != (grid.n,):
            raise PreconditionError("IRF times and counts differ in length")
        peak = float(np.max(counts))
        if not peak > 0:
            raise PreconditionError("IRF histogram has no positive counts")
        onset = int(np.argmax(counts >= _IRF_ONSET_FRACTION * peak))
        pre = counts[: max(onset - _IRF_ONSET_GUARD, 0)]
        if pre.size:
            background = float(np.mean(pre))
        else:
            logger.warning("IRF has no pre-pulse bins, background left at zero")
            background = 0.0
        values = np.clip(counts - background, 0.0, None)
        total = float(np.sum(values)) * grid.step
        if total <= 0:
            raise PreconditionError("IRF is empty after background subtraction")
        logger.debug(f"IRF background {background:.4g} counts/bin, onset bin {onset}")
        return cls(SampledCurve.on(grid, values / total))


def gaussian_irf(fwhm: float, step: float) -> IrfKernel:
    """Unit-area Gaussian IRF of full width ``fwhm`` (ns), centred on 0."""
    if not (math.isfinite(fwhm) and fwhm > 0):
        raise ParameterDomainError(f"IRF FWHM must be > 0, got {fwhm!r}")
    sigma = sigma_from_fwhm(fwhm)
    grid = GridSpec.centered(0.0, 6 * sigma, step)
    values = gaussian_eval(grid.axis, sigma)
    return IrfKernel(SampledCurve.on(grid, values / (np.sum(values) * step)))


def default_time_grid(t0: float = 0.0, step: float = TIME_STEP_NS) -> GridSpec:
    return GridSpec.spanning(t0 - TIME_SPAN_BEFORE_NS, t0 + TIME_SPAN_AFTER_NS, step)


def _exponentials(t: np.ndarray, rates: np.ndarray, t0: float, step: float, binned: bool):
    """Rows of Θ(t−t₀)e^{−r(t−t₀)}, point-sampled or averaged over each bin."""
    r = np.asarray(rates, dtype=float)[:, None]
    if not binned:
        dt = t - t0
        dt = np.where(np.abs(dt) < 1e-9 * step, 0.0, dt)[None, :]
        with np.errstate(over="ignore"):
            return np.where(dt >= 0, np.exp(-r * np.maximum(dt, 0.0)), 0.0)
    lo = np.maximum(t - step / 2, t0)[None, :]
    hi = (t + step / 2)[None, :]
    width = np.maximum(hi - lo, 0.0)
    rw = r * width
    with np.errstate(invalid="ignore", divide="ignore"):
        fraction = np.where(rw > 1e-12, -np.expm1(-rw) / np.where(r > 0, r, 1.0), width)
    return np.exp(-r * (lo - t0)) * fraction / step


def _mixture(grid: GridSpec, amplitudes, rates, t0: float, binned: bool) -> np.ndarray:
    t = grid.axis
    out = np.zeros(grid.n)
    amplitudes = np.asarray(amplitudes, dtype=float)
    rates = np.asarray(rates, dtype=float)
    for lo in range(0, rates.size, _RATE_CHUNK):
        block = _exponentials(t, rates[lo : lo + _RATE_CHUNK], t0, grid.step, binned)
        out += amplitudes[lo : lo + _RATE_CHUNK] @ block
    return out


def _unit_rate(line: int, delta, params: DecayModelParams):
    """R/g² for one line (ns⁻¹ per ns⁻²)."""
    e, c = params.emitter, params.cavity
    gamma_all = c.kappa + e.gamma + e.gamma_star(line)
    detuning = energy_to_rate(np.asarray(delta, dtype=float) + e.line_offset(line))
    return (4.0 / gamma_all) / (1.0 + (detuning / (gamma_all / 2.0)) ** 2)


def coupling_rate_R(line: int, delta, params: DecayModelParams):
    """Detuning-dependent emitter-to-cavity rate R_i(δ) in ns⁻¹."""
    values = params.g * params.g * _unit_rate(line, delta, params)
    return float(values) if np.ndim(values) == 0 else values


def _efficiency_per_g2(line: int, delta, params: DecayModelParams):
    gamma, kappa = params.emitter.gamma, params.cavity.kappa
    unit = _unit_rate(line, delta, params)
    rate = params.g * params.g * unit
    return unit * kappa / (gamma * kappa + rate * (gamma + kappa))


def efficiency_beta_delta(line: int, delta, params: DecayModelParams):
    """β_i(δ) = Rκ/(γκ + R(γ+κ)), bounded by κ/(γ+κ)."""
    values = params.g * params.g * _efficiency_per_g2(line, delta, params)
    return float(values) if np.ndim(values) == 0 else values


def decay_components(
    params: DecayModelParams,
    order: int = GAUSS_HERMITE_ORDER,
    *,
    deltas=None,
    weights=None,
    per_unit_coupling: bool = False,
) -> tuple[np.ndarray, np.ndarray]:
    """Amplitudes and rates of the short decay as a sum of exponentials.

    Without explicit ``deltas`` the detuning is averaged over a Gaussian of
    width √(σ_SD²+σ_vib²) centred on ω̄_X − ω̄_a.
    """
    e, c = params.emitter, params.cavity
    if deltas is None:
        sigma = math.hypot(e.sigma_sd, c.sigma_vib)
        resolve = rate_to_energy(c.kappa + e.gamma + min(e.gamma_star_1, e.gamma_star_2))
        deltas, weights = gaussian_nodes(e.omega_x_bar - c.omega_a_bar, sigma, resolve, order)
    deltas = np.atleast_1d(np.asarray(deltas, dtype=float))
    weights = np.ones(deltas.size) if weights is None else np.asarray(weights, dtype=float)
    g2 = 1.0 if per_unit_coupling else params.g * params.g
    amplitudes, rates = [], []
    for line in (1, 2):
        a = e.amplitude(line)
        rate = e.gamma + params.g * params.g * _unit_rate(line, deltas, params)
        beta = g2 * _efficiency_per_g2(line, deltas, params)
        amplitudes.append(weights * a * beta * rate)
        rates.append(rate)
    return np.concatenate(amplitudes), np.concatenate(rates)


def decay_instantaneous(
    delta: float,
    params: DecayModelParams,
    grid: GridSpec,
    *,
    binned: bool = False,
    per_unit_coupling: bool = False,
) -> SampledCurve:
    amplitudes, rates = decay_components(
        params, deltas=[delta], per_unit_coupling=per_unit_coupling
    )
    return SampledCurve.on(grid, _mixture(grid, amplitudes, rates, params.t0, binned))


def decay_detuning_averaged(
    params: DecayModelParams,
    grid: GridSpec,
    order: int = GAUSS_HERMITE_ORDER,
    *,
    binned: bool = False,
    per_unit_coupling: bool = False,
) -> SampledCurve:
    amplitudes, rates = decay_components(params, order, per_unit_coupling=per_unit_coupling)
    return SampledCurve.on(grid, _mixture(grid, amplitudes, rates, params.t0, binned))


def storage_kernel(
    c: CavityParams, grid: GridSpec, *, t0: float = 0.0, binned: bool = False
) -> SampledCurve:
    """Unnormalised photon-storage kernel e^{−κ_s(t−t₀)}Θ(t−t₀), area 1/κ_s."""
    values = _exponentials(grid.axis, np.array([c.storage_rate]), t0, grid.step, binned)[0]
    return SampledCurve.on(grid, values)


def _reconvolve(grid: GridSpec, signal, irf: IrfKernel, storage_rate: float | None = None):
    """IRF ⋆ [storage ⋆] signal on ``grid``.

    ``signal`` maps a GridSpec to values. It is evaluated on a grid extended by
    the IRF extent on both sides so the result is exact inside ``grid``.
    """
    h = grid.step
    lead = int(math.ceil(max(irf.curve.grid.stop, 0.0) / h - 1e-9))
    trail = int(math.ceil(max(-irf.curve.start, 0.0) / h - 1e-9))
    extended = GridSpec(grid.start - lead * h, h, grid.n + lead + trail)
    curve = SampledCurve.on(extended, signal(extended))
    if storage_rate is not None:
        n = int(min(extended.n, math.ceil(_STORAGE_SPAN_RATES / (storage_rate * h)) + 1))
        kernel_grid = GridSpec(0.0, h, max(n, 1))
        kernel = _exponentials(kernel_grid.axis, np.array([storage_rate]), 0.0, h, True)[0]
        curve = convolve_uniform(curve, SampledCurve.on(kernel_grid, kernel))
    return convolve_uniform(curve, irf.curve).resample(grid.axis)


def decay_model_freespace(
    a: float,
    tau: float,
    t0: float,
    background: float,
    irf: IrfKernel,
    grid: GridSpec,
    second: tuple[float, float] | None = None,
    *,
    binned: bool = True,
) -> SampledCurve:
    """background + IRF ⋆ Θ(A e^{−t/τ} [+ A₂ e^{−t/τ₂}]) with τ in ns."""
    components = [(a, tau)] if second is None else [(a, tau), second]
    for amplitude, lifetime in components:
        if not (math.isfinite(lifetime) and lifetime > 0):
            raise ParameterDomainError(f"lifetime must be > 0, got {lifetime!r}")
        _check_real("amplitude", amplitude)
    amplitudes = np.array([amp for amp, _ in components])
    rates = np.array([1.0 / lifetime for _, lifetime in components])
    values = _reconvolve(grid, lambda g: _mixture(g, amplitudes, rates, t0, binned), irf)
    return SampledCurve.on(grid, background + values)


def decay_model_cavity(
    params: DecayModelParams,
    irf: IrfKernel,
    grid: GridSpec,
    order: int = GAUSS_HERMITE_ORDER,
    *,
    binned: bool = True,
    per_unit_coupling: bool = False,
) -> SampledCurve:
    """background + IRF ⋆ storage ⋆ (short + long).

    The long component passes through the storage convolution too. Fitted
    amplitudes are post-convolution and carry the kernel's 1/κ_s area.
    """
    amplitudes, rates = decay_components(params, order, per_unit_coupling=per_unit_coupling)
    if params.a_long > 0:
        amplitudes = np.append(amplitudes, params.a_long)
        rates = np.append(rates, params.gamma_long)

    def signal(g: GridSpec) -> np.ndarray:
        return _mixture(g, amplitudes, rates, params.t0, binned)

    values = _reconvolve(grid, signal, irf, params.cavity.storage_rate)
    return SampledCurve.on(grid, params.background + values)


def double_exponential_ratio(a1: float, tau1: float, a2: float, tau2: float) -> float:
    """Intensity fraction A₁τ₁/(A₁τ₁ + A₂τ₂) carried by the first component."""
    first, second = a1 * tau1, a2 * tau2
    if first + second <= 0:
        raise ParameterDomainError("double exponential has no intensity")
    return first / (first + second)


def _residual_norm(c: np.ndarray, r: np.ndarray, c_eff: float, gamma: float) -> float:
    cross = float(np.sum(np.outer(c, c) / (r[:, None] + r[None, :])))
    return cross - 2 * c_eff * float(np.sum(c / (r + gamma))) + c_eff**2 / (2 * gamma)


def effective_single_exponential(
    amplitudes, rates, *, method: str = "least_squares"
) -> tuple[float, float]:
    """Best C·e^{−γt} approximating Σ Cᵢe^{−γᵢt} in L²(0, ∞).

    ``method="weighted_mean"`` returns (ΣCᵢ, ΣCᵢγᵢ/ΣCᵢ), the small-spread
    limit of the least-squares solution.
    """
    c = np.atleast_1d(np.asarray(amplitudes, dtype=float))
    r = np.atleast_1d(np.asarray(rates, dtype=float))
    if c.shape != r.shape:
        raise ParameterDomainError("amplitudes and rates differ in length")
    if not np.all(np.isfinite(r)) or np.any(r <= 0):
        raise ParameterDomainError("rates must be finite and > 0")
    if not np.all(np.isfinite(c)) or np.any(c < 0):
        raise ParameterDomainError("amplitudes must be finite and >= 0")
    keep = c > 0
    c, r = c[keep], r[keep]
    if c.size == 0:
        raise ParameterDomainError("at least one amplitude must be > 0")
    total = float(np.sum(c))
    if method == "weighted_mean":
        return total, float(c @ r / total)
    if method != "least_squares":
        raise ParameterDomainError(f"unknown method {method!r}")
    lo, hi = float(np.min(r)), float(np.max(r))
    if hi - lo <= 1e-12 * hi:
        return total, lo

    def stationarity(gamma):
        gamma = np.asarray(gamma, dtype=float)[..., None]
        return np.sum(c * (gamma - r) / (gamma + r) ** 2, axis=-1)

    scan = np.geomspace(lo, hi, EFFECTIVE_EXP_SCAN_POINTS)
    values = stationarity(scan)
    roots = [float(x) for x, v in zip(scan, values, strict=True) if v == 0]
    for i in np.flatnonzero(np.sign(values[:-1]) * np.sign(values[1:]) < 0):
        root, info = brentq(
            lambda x: float(stationarity(x)),
            scan[i],
            scan[i + 1],
            xtol=1e-14 * hi,
            maxiter=EFFECTIVE_EXP_MAX_ITER,
            full_output=True,
            disp=False,
        )
        if not info.converged:
            raise ConvergenceError(
                f"effective rate search stalled after {info.iterations} iterations",
                last_iterate=root,
            )
        roots.append(root)
    if not roots:
        raise ConvergenceError("no stationary point for the effective rate", last_iterate=lo)

    def amplitude(gamma: float) -> float:
        return float(np.sum(c * 2 * gamma / (gamma + r)))

    gamma_eff = min(roots, key=lambda x: _residual_norm(c, r, amplitude(x), x))
    if len(roots) > 1:
        logger.debug(f"{len(roots)} stationary points, kept gamma_eff={gamma_eff:.6g}")
    return amplitude(gamma_eff), gamma_eff


def effective_decay_rate(params: DecayModelParams, order: int = GAUSS_HERMITE_ORDER) -> float:
    """γ_eff of the detuning-averaged short decay."""
    return effective_single_exponential(*decay_components(params, order))[1]


def effective_rate_large_modulation(p: SubsystemParams) -> float:
    """R_eff = 2g²/(κ+γ*), half the resonant rate."""
    return 2 * p.g * p.g / (p.kappa + p.gamma_star)


def acceleration_zeta(
    gamma_eff: float, gamma: float, g: float, kappa: float, gamma_star: float
) -> float:
    """ζ in γ_eff − γ = ζ·g²/(κ+γ*); expected between 2 and 4."""
    if not g > 0:
        raise ParameterDomainError(f"g must be > 0, got {g!r}")
    zeta = (gamma_eff - gamma) * (kappa + gamma_star) / (g * g)
    if not 2.0 <= zeta <= 4.0:
        logger.warning(f"Acceleration factor zeta={zeta:.3f} outside [2, 4]")
    return zeta
