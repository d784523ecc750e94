"""Spectral envelope of the emitter doublet under cavity-energy modulation."""

import math
from dataclasses import dataclass

import numpy as np
from loguru import logger
from scipy.integrate import quad_vec
from scipy.signal import find_peaks

from ..shared.constants import (
    DIP_REFINE_HALF_WINDOW,
    GAUSS_HERMITE_ORDER,
    MARGINAL_SPAN_WIDTHS,
)
from ..shared.exceptions import (
    DegenerateDecompositionError,
    NoDoubletError,
    ParameterDomainError,
    PreconditionError,
)
from .lineshape import GridSpec, SampledCurve, gaussian_eval, gaussian_nodes, voigt_eval
from .quantities import (
    CavityParams,
    EmitterParams,
    SubsystemParams,
    energy_to_rate,
    rate_to_energy,
)
from .spectrum import density_kernel, spectrum_density

__all__ = (
    "DipReport",
    "MarginalDecomposition",
    "dimensionless_parameters",
    "dip_value",
    "dip_vibration_correction",
    "envelope_approx",
    "envelope_discrepancy",
    "envelope_full",
    "envelope_marginal_approx_widths",
    "marginal_exact",
    "marginal_numeric",
    "normalized_dip_approx",
)

_PAIR_BUDGET = 2_000_000


@dataclass(frozen=True, slots=True)
class MarginalDecomposition:
    """∫S dω_a as two Lorentzians centred on ω_X (widths in ns⁻¹).

    When κ̃² < 0 the two components are complex conjugates; only their sum is
    physical.
    """

    omega_x: float
    ell_plus: complex
    ell_minus: complex
    a_plus: complex
    a_minus: complex
    gamma_all: float
    gamma_cap_all: float
    kappa_tilde: complex

    def evaluate(self, omega):
        nu = energy_to_rate(np.asarray(omega, dtype=float) - self.omega_x)
        plus = self.a_plus / (1.0 + (nu / (self.ell_plus / 2.0)) ** 2)
        minus = self.a_minus / (1.0 + (nu / (self.ell_minus / 2.0)) ** 2)
        values = (plus + minus).real
        return float(values) if np.ndim(values) == 0 else values

    def total(self) -> float:
        """∫ over ω in µeV."""
        rate_total = 0.5 * np.pi * (self.a_plus * self.ell_plus + self.a_minus * self.ell_minus)
        return float(rate_to_energy(rate_total.real))

    def window_integral(self, lo: float, hi: float) -> float:
        """∫ over ω ∈ [lo, hi] µeV."""
        total = 0.0
        for a, ell in ((self.a_plus, self.ell_plus), (self.a_minus, self.ell_minus)):
            half = ell / 2.0
            x_hi = energy_to_rate(hi - self.omega_x) / half
            x_lo = energy_to_rate(lo - self.omega_x) / half
            total += a * half * (np.arctan(x_hi) - np.arctan(x_lo))
        return float(rate_to_energy(total.real))


@dataclass(frozen=True, slots=True)
class DipReport:
    max1: float
    max2: float
    min: float
    dip: float
    dip_corrected: float
    extremum_positions: tuple[float, float, float]

    def to_json(self) -> dict:
        return {
            "max1": self.max1,
            "max2": self.max2,
            "min": self.min,
            "dip": self.dip,
            "dip_corrected": self.dip_corrected,
            "extremum_positions_uev": list(self.extremum_positions),
        }


def marginal_exact(p: SubsystemParams) -> MarginalDecomposition:
    g, gamma, gamma_star, kappa = p.g, p.gamma, p.gamma_star, p.kappa
    if gamma_star == 0:
        raise DegenerateDecompositionError(
            "pure dephasing is zero: use marginal_numeric"
        )
    if g == 0:
        raise DegenerateDecompositionError("zero coupling: the marginal vanishes")
    gamma_all = gamma + gamma_star + kappa
    cap = math.sqrt(gamma_all**2 + 4 * g**2 * gamma_all * (gamma + kappa) / (gamma * kappa))
    kt = np.sqrt(complex(-4 * g**2 + ((cap - gamma_all) / 2 + kappa) ** 2))
    if kt == 0:
        raise DegenerateDecompositionError("kappa_tilde vanishes: use marginal_numeric")
    numerator = 32 * g**4 * gamma_all * kappa * gamma_star
    amplitudes = []
    for sign in (1, -1):
        denom = (
            gamma**2
            * cap
            * kt
            * (gamma_all + cap + sign * 2 * kt)
            * (gamma_all**2 - gamma_all * cap + 2 * cap * kappa + sign * 2 * gamma_all * kt)
        )
        amplitudes.append(sign * numerator / denom)
    return MarginalDecomposition(
        omega_x=p.omega_x,
        ell_plus=(gamma_all + cap) / 2 + kt,
        ell_minus=(gamma_all + cap) / 2 - kt,
        a_plus=complex(amplitudes[0]),
        a_minus=complex(amplitudes[1]),
        gamma_all=gamma_all,
        gamma_cap_all=cap,
        kappa_tilde=complex(kt),
    )


def _marginal_grid(p: SubsystemParams) -> GridSpec:
    width = rate_to_energy(p.gamma_all + p.g)
    step = rate_to_energy(min(p.gamma + p.gamma_star, p.kappa)) / 20
    return GridSpec.centered(p.omega_x, MARGINAL_SPAN_WIDTHS * width, step)


def marginal_numeric(p: SubsystemParams, grid: GridSpec | None = None) -> SampledCurve:
    """∫S(ω; ω_X, ω_a) dω_a by adaptive quadrature, on ``grid`` (µeV)."""
    grid = grid or _marginal_grid(p)
    omega = grid.axis
    span = MARGINAL_SPAN_WIDTHS * rate_to_energy(p.gamma_all + p.g)
    lo, hi = p.omega_x - span, p.omega_x + span

    def integrand(omega_a):
        q = SubsystemParams(p.omega_x, omega_a, p.gamma, p.gamma_star, p.kappa, p.g)
        return spectrum_density(q, omega)

    pieces = [
        quad_vec(integrand, a, b, epsrel=1e-8, epsabs=0.0)[0]
        for a, b in ((-np.inf, lo), (lo, hi), (hi, np.inf))
    ]
    return SampledCurve.on(grid, np.sum(pieces, axis=0))


def _line_nodes(e: EmitterParams, c: CavityParams, line: int, order: int):
    linewidth = rate_to_energy(e.linewidth(line))
    x_nodes, x_weights = gaussian_nodes(e.omega_x_bar, e.sigma_sd, linewidth, order)
    a_nodes, a_weights = gaussian_nodes(
        c.omega_a_bar, c.sigma_vib, rate_to_energy(min(c.kappa, e.linewidth(line))), order
    )
    wx, wa = np.meshgrid(x_nodes + e.line_offset(line), a_nodes, indexing="ij")
    weights = np.outer(x_weights, a_weights)
    return wx.ravel(), wa.ravel(), weights.ravel()


def envelope_full(
    e: EmitterParams,
    c: CavityParams,
    g: float,
    grid: GridSpec,
    order: int = GAUSS_HERMITE_ORDER,
    *,
    per_unit_coupling: bool = False,
) -> SampledCurve:
    """Doublet envelope averaged over spectral diffusion and cavity vibrations.

    ``g`` is in ns⁻¹. With ``per_unit_coupling`` the curve is divided by g²,
    which keeps it finite and g-dependent as g → 0.
    """
    if g < 0 or not math.isfinite(g):
        raise ParameterDomainError(f"g must be >= 0, got {g!r}")
    nu = energy_to_rate(grid.axis)
    total = np.zeros(grid.n)
    for line in (1, 2):
        amplitude = e.amplitude(line)
        if amplitude == 0:
            continue
        wx_e, wa_e, weights = _line_nodes(e, c, line, order)
        wx, wa, prefactor = density_kernel(
            energy_to_rate(wx_e),
            energy_to_rate(wa_e),
            e.gamma,
            e.gamma_star(line),
            c.kappa,
            g,
            per_g2=per_unit_coupling,
        )
        coeff = weights * prefactor
        chunk = max(1, _PAIR_BUDGET // max(coeff.size, 1))
        for lo in range(0, grid.n, chunk):
            n = nu[lo : lo + chunk, None]
            density = 1.0 / (np.abs(n - wx) ** 2 * np.abs(n - wa) ** 2)
            total[lo : lo + chunk] += amplitude * (density @ coeff)
    return SampledCurve.on(grid, energy_to_rate(total))


def envelope_approx(e: EmitterParams, c: CavityParams, g: float, grid: GridSpec) -> SampledCurve:
    """Small-coupling envelope S_app + r·(S_app ⋆ 𝓛_2κ), without the g² prefactor.

    S_app is the free-space Voigt doublet including σ_SD. The convolution with
    𝓛_2κ adds 2ħκ to each Lorentzian width.
    """
    omega = grid.axis
    two_kappa = rate_to_energy(2 * c.kappa)
    values = np.zeros(grid.n)
    for line in (1, 2):
        amplitude = e.amplitude(line)
        if amplitude == 0:
            continue
        gs = e.gamma_star(line)
        ratio = gs / (gs + c.kappa) * g * g / (c.kappa * e.gamma)
        width = rate_to_energy(e.linewidth(line))
        centre = e.omega_x_bar + e.line_offset(line)
        values += amplitude * voigt_eval(omega, width, e.sigma_sd, centre)
        if ratio:
            values += amplitude * ratio * voigt_eval(omega, width + two_kappa, e.sigma_sd, centre)
    return SampledCurve.on(grid, values)


def envelope_marginal_approx_widths(p: SubsystemParams) -> dict[str, float]:
    """Small-g approximations to ℓ± (ns⁻¹) and to A⁺ℓ⁺/(A⁻ℓ⁻)."""
    g2 = p.g * p.g
    gamma_all = p.gamma_all
    x = 4 * g2 * (p.gamma + p.kappa) / (p.gamma * p.kappa * gamma_all)
    root = math.sqrt(1 + x)
    return {
        "ell_minus": p.gamma + p.gamma_star,
        "ell_plus": p.kappa + gamma_all * root,
        "area_ratio": (p.gamma + p.gamma_star) / p.kappa * (root - 1) / (root + 1),
        "ell_plus_small_g": p.gamma + p.gamma_star + 2 * p.kappa + 2 * g2 / p.gamma,
        "area_ratio_small_g": p.gamma_star / (p.gamma_star + p.kappa) * g2 / (p.kappa * p.gamma),
        "coupling_parameter": x,
    }


def envelope_discrepancy(
    e: EmitterParams, c: CavityParams, g: float, grid: GridSpec
) -> dict[str, float]:
    """Compare envelope_full with the slowly-varying-modulation form P(ω)·∫S dω_a.

    Both curves are normalised to unit area before comparison.
    """
    full = envelope_full(e, c, g, grid)
    omega = grid.axis
    approx = np.zeros(grid.n)
    for line in (1, 2):
        amplitude = e.amplitude(line)
        if amplitude == 0:
            continue
        p = e.subsystem(line, g, c.kappa, omega_a=c.omega_a_bar)
        try:
            marginal = marginal_exact(p).evaluate(omega)
        except DegenerateDecompositionError:
            marginal = marginal_numeric(p, grid).values
        if c.sigma_vib > 0:
            presence = gaussian_eval(omega, c.sigma_vib, c.omega_a_bar)
        else:
            presence = np.ones(grid.n)
        approx += amplitude * presence * marginal
    full_n = full.values / max(full.integral(), np.finfo(float).tiny)
    approx_curve = SampledCurve.on(grid, approx)
    approx_n = approx / max(approx_curve.integral(), np.finfo(float).tiny)
    peak = float(np.max(full_n)) or 1.0
    diff = np.abs(full_n - approx_n)
    report = {
        "max_abs_difference": float(np.max(diff)),
        "max_relative_to_peak": float(np.max(diff) / peak),
        "l1_difference": float(np.sum(diff) * grid.step),
        "sigma_vib_over_kappa": c.sigma_vib / rate_to_energy(c.kappa),
    }
    logger.info(
        f"Envelope discrepancy vs broad-modulation form: "
        f"{report['max_relative_to_peak']:.3%} of peak"
    )
    return report


def _refine(axis: np.ndarray, values: np.ndarray, index: int) -> tuple[float, float]:
    lo = max(0, index - DIP_REFINE_HALF_WINDOW)
    hi = min(values.size, index + DIP_REFINE_HALF_WINDOW + 1)
    if hi - lo < 3:
        return float(axis[index]), float(values[index])
    x = axis[lo:hi] - axis[index]
    a, b, c = np.polyfit(x, values[lo:hi], 2)
    if a == 0:
        return float(axis[index]), float(values[index])
    vertex = -b / (2 * a)
    if abs(vertex) > x[-1] - x[0]:
        return float(axis[index]), float(values[index])
    return float(axis[index] + vertex), float(c - b * b / (4 * a))


def dip_value(
    curve: SampledCurve, delta_hint: float, sigma_vib: float | None = None
) -> DipReport:
    """Central minimum over the mean of the two maxima.

    Extrema are refined by a quadratic fit over ±5 grid points. When
    ``sigma_vib`` is given, the corrected dip uses ``delta_hint`` as Δ.
    """
    values = np.asarray(curve.values)
    axis = curve.axis
    peaks, props = find_peaks(values, prominence=0.0)
    if peaks.size < 2:
        raise NoDoubletError(f"found {peaks.size} maxima, need two")
    best = None
    order = np.argsort(props["prominences"])[::-1]
    candidates = peaks[order[: min(peaks.size, 8)]]
    for i, a in enumerate(candidates):
        for b in candidates[i + 1 :]:
            left, right = sorted((int(a), int(b)))
            separation = axis[right] - axis[left]
            mismatch = abs(separation - delta_hint) if delta_hint > 0 else 0.0
            score = (mismatch, -min(values[left], values[right]))
            if best is None or score < best[0]:
                best = (score, left, right)
    _, left, right = best
    centre = left + int(np.argmin(values[left : right + 1]))
    if centre in (left, right):
        raise NoDoubletError("no minimum between the two maxima")
    x1, max1 = _refine(axis, values, left)
    x2, max2 = _refine(axis, values, right)
    x0, minimum = _refine(axis, values, centre)
    mean_max = (max1 + max2) / 2
    if mean_max <= 0:
        raise NoDoubletError("maxima are not positive")
    dip = max(minimum, 0.0) / mean_max
    corrected = dip if sigma_vib is None else dip_vibration_correction(dip, delta_hint, sigma_vib)
    return DipReport(max1, max2, minimum, dip, corrected, (x1, x0, x2))


def dip_vibration_correction(dip: float, delta: float, sigma_vib: float) -> float:
    if not sigma_vib > 0:
        raise ParameterDomainError(f"sigma_vib must be > 0, got {sigma_vib!r}")
    return dip * math.exp(-((delta / 2) ** 2) / (2 * sigma_vib**2))


def normalized_dip_approx(e: EmitterParams, c: CavityParams, g: float) -> float:
    """(dip − dip_fs)/dip_fs for a symmetric doublet in the small-coupling regime."""
    if not math.isclose(e.a1, e.a2, rel_tol=1e-9) or not math.isclose(
        e.gamma_star_1, e.gamma_star_2, rel_tol=1e-9
    ):
        raise PreconditionError("normalized dip approximation needs a symmetric doublet")
    if g == 0:
        return 0.0
    gs = e.gamma_star_1
    ratio = gs / (gs + c.kappa) * g * g / (c.kappa * e.gamma)
    width = rate_to_energy(e.linewidth(1))
    broadened = width + rate_to_energy(2 * c.kappa)
    half = e.delta / 2

    def doublet(x, w):
        return voigt_eval(x - half, w, e.sigma_sd) + voigt_eval(x + half, w, e.sigma_sd)

    centre_ratio = doublet(0.0, broadened) / doublet(0.0, width)
    side_ratio = doublet(half, broadened) / doublet(half, width)
    return ratio * (centre_ratio - side_ratio) / (1 + ratio * side_ratio)


def dimensionless_parameters(e: EmitterParams, c: CavityParams, g: float) -> dict[str, dict[str, float]]:
    """Dominant groups controlling the envelope and the decay, per line."""
    out = {}
    for line in (1, 2):
        gs = e.gamma_star(line)
        decay = g * g / ((c.kappa + gs) * e.gamma)
        out[f"line{line}"] = {
            "envelope": gs / (gs + c.kappa) * decay,
            "decay": decay,
            "weak_coupling": g * g / (c.kappa * (e.gamma + gs + c.kappa)),
            "emitter_fraction": e.gamma / (e.gamma + c.kappa),
        }
    return out
