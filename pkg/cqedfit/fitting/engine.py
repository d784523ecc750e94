"""Bounded least-squares engine shared by every fit pipeline."""

from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from loguru import logger
from scipy.optimize import least_squares, minimize

from ..model.lineshape import SampledCurve
from ..shared.constants import FIT_MAX_NFEV
from ..shared.exceptions import ParameterDomainError, PreconditionError

__all__ = ("FitResult", "Parameter", "minimize_ssr")


@dataclass(frozen=True, slots=True)
class Parameter:
    name: str
    init: float
    lower: float = -np.inf
    upper: float = np.inf

    def __post_init__(self):
        if not self.lower <= self.init <= self.upper:
            raise ParameterDomainError(
                f"start value of {self.name} ({self.init}) is outside "
                f"[{self.lower}, {self.upper}]"
            )


@dataclass(frozen=True, slots=True)
class FitResult:
    params: dict[str, float]
    uncertainties: dict[str, float]
    ssr: float
    n_eval: int
    converged: bool
    message: str = ""
    extra: dict[str, Any] = field(default_factory=dict)

    def __getitem__(self, name: str) -> float:
        return self.params[name]

    def to_json(self) -> dict[str, Any]:
        return {
            "params": dict(self.params),
            "uncertainties": dict(self.uncertainties),
            "ssr": self.ssr,
            "n_eval": self.n_eval,
            "converged": self.converged,
            "message": self.message,
            **({"extra": self.extra} if self.extra else {}),
        }


def _uncertainties(jac: np.ndarray, ssr: float, n_data: int) -> np.ndarray:
    """√diag of (JᵀJ)⁺·SSr/(n−p); NaN where the data cannot constrain a parameter."""
    n_free = jac.shape[1]
    dof = n_data - n_free
    if dof <= 0 or jac.size == 0:
        return np.full(n_free, np.nan)
    covariance = np.linalg.pinv(jac.T @ jac) * (ssr / dof)
    return np.sqrt(np.clip(np.diag(covariance), 0.0, None))


def _forward_jacobian(residuals, x, upper, f0):
    jac = np.empty((f0.size, x.size))
    for k in range(x.size):
        h = 1.5e-8 * max(abs(x[k]), 1.0)
        step = h if x[k] + h <= upper[k] else -h
        probe = x.copy()
        probe[k] += step
        jac[:, k] = (residuals(probe) - f0) / step
    return jac


def minimize_ssr(
    model: Callable[[np.ndarray], np.ndarray],
    data: SampledCurve | np.ndarray,
    params: Sequence[Parameter],
    *,
    max_nfev: int = FIT_MAX_NFEV,
    fallback: bool = True,
) -> FitResult:
    """Minimise Σ(y_data − y_model)² over the free ``params``.

    ``model`` maps the parameter vector to predictions on the data grid. The
    trust-region reflective solver runs first; Powell is tried when it does
    not converge. The returned SSr is never above the SSr at the start.
    """
    y = np.asarray(data.values if isinstance(data, SampledCurve) else data, dtype=float)
    names = [p.name for p in params]
    x0 = np.array([p.init for p in params], dtype=float)
    lower = np.array([p.lower for p in params], dtype=float)
    upper = np.array([p.upper for p in params], dtype=float)
    n_eval = 0

    def residuals(x: np.ndarray) -> np.ndarray:
        nonlocal n_eval
        n_eval += 1
        r = np.asarray(model(x), dtype=float) - y
        if r.shape != y.shape:
            raise PreconditionError(f"model returned shape {r.shape}, data is {y.shape}")
        return np.where(np.isfinite(r), r, 1e100)

    free = lower < upper

    def free_residuals(z: np.ndarray) -> np.ndarray:
        return residuals(_embed(z, x0, free))

    best_x, best_f = x0, residuals(x0)
    jac = None
    if not np.any(free):
        converged, message = True, "all parameters fixed"
    else:
        sol = least_squares(
            free_residuals,
            x0[free],
            bounds=(lower[free], upper[free]),
            method="trf",
            x_scale="jac",
            max_nfev=max_nfev,
        )
        converged, message = sol.status > 0, sol.message
        if float(sol.fun @ sol.fun) <= float(best_f @ best_f):
            best_x, best_f, jac = _embed(sol.x, x0, free), sol.fun, sol.jac
        if fallback and not converged:
            logger.debug(f"Trust-region fit stopped ({message}); trying Powell")
            opt = minimize(
                lambda z: float(np.sum(free_residuals(z) ** 2)),
                best_x[free],
                method="Powell",
                bounds=list(zip(lower[free], upper[free], strict=True)),
                options={"maxfev": max_nfev, "xtol": 1e-10, "ftol": 1e-14},
            )
            x_powell = _embed(opt.x, x0, free)
            f_powell = residuals(x_powell)
            if float(f_powell @ f_powell) < float(best_f @ best_f):
                best_x, best_f, jac = x_powell, f_powell, None
            converged, message = bool(opt.success), f"powell: {opt.message}"

    ssr = float(best_f @ best_f)
    sigma = np.zeros(x0.size)
    if np.any(free):
        if jac is None:
            jac = _forward_jacobian(free_residuals, best_x[free], upper[free], best_f)
        sigma[free] = _uncertainties(np.asarray(jac), ssr, y.size)
    if not converged:
        logger.warning(f"Fit did not converge after {n_eval} evaluations: {message}")
    return FitResult(
        params={n: float(v) for n, v in zip(names, best_x, strict=True)},
        uncertainties={n: float(s) for n, s in zip(names, sigma, strict=True)},
        ssr=ssr,
        n_eval=n_eval,
        converged=bool(converged),
        message=str(message),
    )


def _embed(z: np.ndarray, base: np.ndarray, free: np.ndarray) -> np.ndarray:
    x = np.array(base, dtype=float)
    x[free] = z
    return x
