"""Brute-force reference for the best single-exponential reduction."""

import numpy as np
from loguru import logger
from scipy.optimize import minimize

from ..shared.exceptions import ParameterDomainError

__all__ = ("oracle_best_single_exponential", "squared_distance")


def _validated(amplitudes, rates) -> tuple[np.ndarray, np.ndarray]:
    c = np.asarray(amplitudes, dtype=float).ravel()
    r = np.asarray(rates, dtype=float).ravel()
    if c.size == 0 or c.shape != r.shape:
        raise ParameterDomainError("amplitudes and rates must be matching non-empty sequences")
    if np.any(c < 0) or np.any(r <= 0) or not (np.all(np.isfinite(c)) and np.all(np.isfinite(r))):
        raise ParameterDomainError("amplitudes must be >= 0 and rates > 0")
    return c, r


def squared_distance(scale, rate, amplitudes: np.ndarray, rates: np.ndarray):
    """‖C·e^{−γt} − Σcᵢe^{−rᵢt}‖² on t ≥ 0, from the closed-form pair integrals."""
    scale = np.asarray(scale, dtype=float)
    rate = np.asarray(rate, dtype=float)
    mixture = float(np.sum(np.outer(amplitudes, amplitudes) / np.add.outer(rates, rates)))
    cross = np.sum(amplitudes / (rates + rate[..., None]), axis=-1)
    return scale**2 / (2 * rate) - 2 * scale * cross + mixture


def oracle_best_single_exponential(
    amplitudes, rates, *, grid_points: int = 401
) -> tuple[float, float]:
    """(C*, γ*) by a dense (C, γ) grid search refined with Nelder–Mead.

    The grid spans γ over the rate range on a log scale and C over
    [0, 2·Σcᵢ]. Meant only as an independent check, not for production use.
    """
    c, r = _validated(amplitudes, rates)
    total = float(c.sum())
    if total == 0:
        raise ParameterDomainError("at least one amplitude must be > 0")
    if np.allclose(r, r[0], rtol=1e-12):
        return total, float(r[0])
    gammas = np.geomspace(r.min(), r.max(), grid_points)
    scales = np.linspace(0.0, 2.0 * total, grid_points)
    mesh_c, mesh_g = np.meshgrid(scales, gammas, indexing="ij")
    chi = squared_distance(mesh_c, mesh_g, c, r)
    i, j = np.unravel_index(int(np.argmin(chi)), chi.shape)
    start = np.array([scales[i], np.log(gammas[j])])

    def objective(x):
        return float(squared_distance(x[0], np.exp(x[1]), c, r))

    result = minimize(
        objective,
        start,
        method="Nelder-Mead",
        options={"xatol": 1e-12, "fatol": 1e-18 * max(total**2, 1e-300), "maxiter": 20_000},
    )
    logger.debug(f"Oracle reduction: {result.nit} Nelder-Mead iterations, {result.message}")
    return float(result.x[0]), float(np.exp(result.x[1]))
