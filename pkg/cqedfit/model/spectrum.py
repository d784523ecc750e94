"""Emission spectrum of one dephased two-level emitter in one cavity mode.

Every formula is evaluated in rate units (ns⁻¹): energies are divided by ħ on
the way in and spectral densities returned per µeV on the way out.
"""

from dataclasses import dataclass

import numpy as np
from loguru import logger

from .lineshape import GridSpec, SampledCurve
from .quantities import SubsystemParams, energy_to_rate, rate_to_energy

__all__ = (
    "EffectiveEnergies",
    "coupling_function_f",
    "coupling_shift",
    "density_kernel",
    "effective_energies",
    "efficiency_per_g2",
    "single_photon_efficiency",
    "spectrum_curve",
    "spectrum_density",
    "spectrum_normalization",
)


@dataclass(frozen=True, slots=True)
class EffectiveEnergies:
    """Complex effective energies in µeV; imaginary parts are half widths."""

    omega_x_tilde: complex
    omega_a_tilde: complex
    delta_tilde: complex


def coupling_function_f(z):
    """f(z) = (√(1+z²) − 1)/z on the principal branch, with f(0) = 0.

    Evaluated as z/(1 + √(1+z²)), which is the same function without the
    cancellation near z = 0.
    """
    z = np.asarray(z, dtype=complex)
    out = z / (1.0 + np.sqrt(1.0 + z * z))
    return complex(out) if out.ndim == 0 else out


def coupling_shift(delta_tilde, g):
    """g·f(2g/δ̃) in the form 2g²/(δ̃ + q) with q = δ̃·√(1 + 4g²/δ̃²).

    Finite at δ̃ = 0, where it equals g, and exactly 0 at g = 0.
    """
    delta_tilde = np.asarray(delta_tilde, dtype=complex)
    g = np.asarray(g, dtype=float)
    q = np.sqrt(delta_tilde * delta_tilde + 4.0 * g * g)
    q = np.where((q * np.conj(delta_tilde)).real < 0, -q, q)
    denom = delta_tilde + q
    with np.errstate(divide="ignore", invalid="ignore"):
        shift = np.where(g == 0, 0.0, 2.0 * g * g / np.where(denom == 0, 1.0, denom))
    return shift


def _effective_rates(omega_x, omega_a, linewidth, kappa, g):
    """Effective complex frequencies in ns⁻¹ (broadcasting)."""
    x = omega_x + 0.5j * linewidth
    a = omega_a + 0.5j * kappa
    delta_tilde = x - a
    shift = coupling_shift(delta_tilde, g)
    return x + shift, a - shift, delta_tilde


def effective_energies(p: SubsystemParams) -> EffectiveEnergies:
    wx, wa, dt = _effective_rates(
        energy_to_rate(p.omega_x),
        energy_to_rate(p.omega_a),
        p.gamma + p.gamma_star,
        p.kappa,
        p.g,
    )
    return EffectiveEnergies(
        omega_x_tilde=complex(rate_to_energy(wx)),
        omega_a_tilde=complex(rate_to_energy(wa)),
        delta_tilde=complex(rate_to_energy(dt)),
    )


def efficiency_per_g2(detuning, gamma, gamma_star, kappa, g):
    """β/g², finite at g = 0 (rates in ns⁻¹, broadcasting)."""
    gamma_all = gamma + gamma_star + kappa
    lorentz = 1.0 + (detuning / (gamma_all / 2.0)) ** 2
    return 4.0 / (4.0 * g * g * (1.0 + gamma / kappa) + gamma * gamma_all * lorentz)


def single_photon_efficiency(p: SubsystemParams) -> float:
    beta_hat = efficiency_per_g2(p.detuning_rate, p.gamma, p.gamma_star, p.kappa, p.g)
    return float(p.g * p.g * beta_hat)


def _normalization_rates(detuning, gamma, gamma_star, kappa, g):
    gamma_all = gamma + gamma_star + kappa
    inner = g * g + 0.25 * (gamma + gamma_star) * kappa * (
        1.0 + 4.0 * detuning * detuning / (gamma_all * gamma_all)
    )
    return 2.0 * np.pi / (gamma_all * inner)


def spectrum_normalization(p: SubsystemParams) -> float:
    """Closed form of ∫|ω−ω̃_X|⁻²|ω−ω̃_a|⁻² dω in rate units (ns³)."""
    return float(
        _normalization_rates(p.detuning_rate, p.gamma, p.gamma_star, p.kappa, p.g)
    )


def density_kernel(omega_x, omega_a, gamma, gamma_star, kappa, g, *, per_g2=False):
    """Per-configuration pieces of the spectrum, all in rate units.

    Returns the two effective complex frequencies and the prefactor β/norm
    (or β/(g²·norm) when ``per_g2``), so that
    S(ν) = prefactor / (|ν − ω̃_X|²·|ν − ω̃_a|²) in ns.
    """
    detuning = omega_x - omega_a
    wx, wa, _ = _effective_rates(omega_x, omega_a, gamma + gamma_star, kappa, g)
    beta_hat = efficiency_per_g2(detuning, gamma, gamma_star, kappa, g)
    scale = beta_hat if per_g2 else beta_hat * g * g
    prefactor = scale / _normalization_rates(detuning, gamma, gamma_star, kappa, g)
    return wx, wa, prefactor


def _evaluate(nu, wx, wa, prefactor):
    return prefactor / (np.abs(nu - wx) ** 2 * np.abs(nu - wa) ** 2)


def spectrum_density(p: SubsystemParams, omega):
    """S(ω) in µeV⁻¹; integrates to β over ω in µeV.

    A vanishing coupling gives an all-zero spectrum rather than an error.
    """
    if p.g == 0:
        logger.debug("Zero coupling: spectrum vanishes")
    wx, wa, prefactor = density_kernel(
        energy_to_rate(p.omega_x),
        energy_to_rate(p.omega_a),
        p.gamma,
        p.gamma_star,
        p.kappa,
        p.g,
    )
    nu = energy_to_rate(np.asarray(omega, dtype=float))
    values = energy_to_rate(_evaluate(nu, wx, wa, prefactor))
    return float(values) if np.ndim(values) == 0 else values


def spectrum_curve(p: SubsystemParams, grid: GridSpec) -> SampledCurve:
    if p.g == 0:
        logger.warning("Zero coupling: spectrum curve is identically zero")
    return SampledCurve.on(grid, spectrum_density(p, grid.axis))
