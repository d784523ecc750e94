"""Purcell-factor arithmetic."""

import math

from loguru import logger

from ..shared.exceptions import ParameterDomainError

__all__ = (
    "acceleration_from_purcell",
    "effective_quality_factor",
    "lambda3_over_v",
    "purcell_from_acceleration",
    "purcell_theoretical",
    "quantum_yield",
)


def _positive(**values: float) -> None:
    for name, value in values.items():
        if not (math.isfinite(value) and value > 0):
            raise ParameterDomainError(f"{name} must be > 0, got {value!r}")


def purcell_from_acceleration(tau_fs: float, tau_cav: float, eta_qy: float) -> float:
    """F_p from γ_cav = γ(1 + η_QY·F_p); lifetimes in any common unit."""
    _positive(tau_fs=tau_fs, tau_cav=tau_cav, eta_qy=eta_qy)
    if tau_cav > tau_fs:
        logger.warning("Cavity lifetime exceeds free-space lifetime: negative Purcell factor")
    return (tau_fs / tau_cav - 1.0) / eta_qy


def acceleration_from_purcell(f_p: float, eta_qy: float) -> float:
    """τ_fs/τ_cav = 1 + η_QY·F_p."""
    _positive(eta_qy=eta_qy)
    return 1.0 + eta_qy * f_p


def effective_quality_factor(q_cav: float, q_em: float) -> float:
    """(1/Q_cav + 1/Q_em)⁻¹; an infinite Q_em returns Q_cav."""
    if q_em == math.inf:
        _positive(q_cav=q_cav)
        return q_cav
    _positive(q_cav=q_cav, q_em=q_em)
    return 1.0 / (1.0 / q_cav + 1.0 / q_em)


def lambda3_over_v(wavelength_nm: float, volume_um3: float) -> float:
    _positive(wavelength_nm=wavelength_nm, volume_um3=volume_um3)
    return (wavelength_nm * 1e-3) ** 3 / volume_um3


def purcell_theoretical(
    wavelength_nm: float | None,
    n: float,
    q_cav: float,
    q_em: float,
    lambda3_over_v_value: float | None = None,
    *,
    volume_um3: float | None = None,
) -> float:
    """F_p = (3/4π²)·Q_eff·(λ/n)³/V.

    Pass λ³/V directly, or ``wavelength_nm`` with ``volume_um3``.
    """
    if lambda3_over_v_value is None:
        if wavelength_nm is None or volume_um3 is None:
            raise ParameterDomainError("need lambda3_over_v or wavelength and volume")
        lambda3_over_v_value = lambda3_over_v(wavelength_nm, volume_um3)
    _positive(n=n, lambda3_over_v=lambda3_over_v_value)
    q_eff = effective_quality_factor(q_cav, q_em)
    return 3.0 / (4.0 * math.pi**2) * q_eff * lambda3_over_v_value / n**3


def quantum_yield(i_sat: float, eta_col: float) -> float:
    """η_QY = I_sat/η_col, with I_sat in detected photons per pulse."""
    _positive(i_sat=i_sat, eta_col=eta_col)
    eta = i_sat / eta_col
    if eta > 1:
        logger.warning(f"Quantum yield {eta:.3f} exceeds 1; check the collection efficiency")
    return eta
