"""Excitation-power dependence: saturation curve and power-law line assignment."""

from collections.abc import Sequence

import numpy as np
from loguru import logger

from ..shared.constants import FIT_MAX_NFEV
from ..shared.exceptions import ParameterDomainError, PreconditionError
from .engine import FitResult, Parameter, minimize_ssr

__all__ = ("fit_power_law", "fit_saturation", "saturation_model")


def saturation_model(power, i_sat: float, p_sat: float):
    x = np.asarray(power, dtype=float) / p_sat
    return i_sat * x / (1.0 + x)


def _columns(power, intensity) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(power, dtype=float)
    i = np.asarray(intensity, dtype=float)
    if p.shape != i.shape or p.ndim != 1:
        raise PreconditionError("power and intensity must be matching 1-D sequences")
    if not (np.all(np.isfinite(p)) and np.all(np.isfinite(i))):
        raise ParameterDomainError("power and intensity must be finite")
    return p, i


def fit_saturation(
    power: Sequence[float], intensity: Sequence[float], *, max_nfev: int = FIT_MAX_NFEV
) -> FitResult:
    """I = I_sat·(P/P_sat)/(1 + P/P_sat)."""
    p, i = _columns(power, intensity)
    if p.size < 3:
        raise PreconditionError("saturation fit needs at least three points")
    if np.any(p < 0):
        raise ParameterDomainError("powers must be >= 0")
    i_max = float(np.max(i))
    p_half = float(np.interp(i_max / 2, np.maximum.accumulate(i[np.argsort(p)]), np.sort(p)))
    params = [
        Parameter("i_sat", max(1.5 * i_max, 1e-300), 0.0, np.inf),
        Parameter("p_sat", max(p_half, 1e-300), 1e-300, np.inf),
    ]
    result = minimize_ssr(lambda x: saturation_model(p, x[0], x[1]), i, params, max_nfev=max_nfev)
    logger.info(f"Saturation: I_sat={result['i_sat']:.4g}, P_sat={result['p_sat']:.4g}")
    return result


def fit_power_law(power: Sequence[float], intensity: Sequence[float]) -> FitResult:
    """Least-squares slope α of log I against log P."""
    p, i = _columns(power, intensity)
    if np.any(p <= 0) or np.any(i <= 0):
        raise ParameterDomainError("power-law fit needs strictly positive data")
    if p.size < 2:
        raise PreconditionError("power-law fit needs at least two points")
    x, y = np.log(p), np.log(i)
    if p.size > 3:
        coeffs, cov = np.polyfit(x, y, 1, cov=True)
        errors = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    else:
        coeffs = np.polyfit(x, y, 1)
        errors = np.full(2, np.nan)
    residual = y - np.polyval(coeffs, x)
    return FitResult(
        params={"alpha": float(coeffs[0]), "prefactor": float(np.exp(coeffs[1]))},
        uncertainties={"alpha": float(errors[0]), "prefactor": float(np.exp(coeffs[1]) * errors[1])},
        ssr=float(residual @ residual),
        n_eval=1,
        converged=True,
        message="linear regression on logarithms",
    )
