"""Free-space lifetime fits through a measured or modelled IRF."""

import numpy as np
from loguru import logger

from ..model.dynamics import IrfKernel, decay_model_freespace, double_exponential_ratio
from ..model.lineshape import SampledCurve
from ..shared.constants import FIT_MAX_NFEV
from ..shared.exceptions import ParameterDomainError
from .engine import FitResult, Parameter, minimize_ssr

__all__ = ("fit_freespace_decay",)


def _guess(data: SampledCurve, irf: IrfKernel) -> dict[str, float]:
    values = np.asarray(data.values)
    axis = data.axis
    peak = int(np.argmax(values))
    lead = max(peak // 5, 1)
    background = float(np.median(values[:lead]))
    height = float(values[peak] - background)
    irf_peak = float(irf.curve.axis[int(np.argmax(irf.curve.values))])
    after = np.flatnonzero(values[peak:] - background < height / np.e)
    tau = float(axis[peak + after[0]] - axis[peak]) if after.size else float(axis[-1] - axis[peak]) / 3
    return {
        "a": max(height, 0.0),
        "tau_ns": max(tau, 2 * data.step),
        "t0_ns": float(axis[peak]) - irf_peak,
        "background": background,
    }


def fit_freespace_decay(
    data: SampledCurve,
    irf: IrfKernel,
    *,
    components: int = 1,
    init: dict[str, float] | None = None,
    max_nfev: int = FIT_MAX_NFEV,
) -> FitResult:
    """Mono- or bi-exponential lifetime fit; ``data`` is on a ns axis.

    The bi-exponential result carries the intensity fraction A₁τ₁/(A₁τ₁+A₂τ₂)
    of the first component under ``extra["intensity_ratio"]``.
    """
    if components not in (1, 2):
        raise ParameterDomainError(f"components must be 1 or 2, got {components!r}")
    start = _guess(data, irf)
    if components == 2:
        start.update({"a2": 0.1 * start["a"], "tau2_ns": 5 * start["tau_ns"]})
    start.update(init or {})
    axis = data.axis
    span = float(axis[-1] - axis[0])
    params = [
        Parameter("a", start["a"], 0.0, np.inf),
        Parameter("tau_ns", start["tau_ns"], data.step / 10, 10 * span),
        Parameter("t0_ns", float(np.clip(start["t0_ns"], axis[0], axis[-1])), axis[0], axis[-1]),
        Parameter("background", start["background"]),
    ]
    if components == 2:
        params += [
            Parameter("a2", start["a2"], 0.0, np.inf),
            Parameter("tau2_ns", start["tau2_ns"], data.step / 10, 10 * span),
        ]
    grid = data.grid

    def model(x: np.ndarray) -> np.ndarray:
        second = (x[4], x[5]) if components == 2 else None
        return decay_model_freespace(x[0], x[1], x[2], x[3], irf, grid, second).values

    result = minimize_ssr(model, data, params, max_nfev=max_nfev)
    extra = {"lifetime_ps": 1000 * result["tau_ns"]}
    if components == 2:
        extra["intensity_ratio"] = double_exponential_ratio(
            result["a"], result["tau_ns"], result["a2"], result["tau2_ns"]
        )
        extra["lifetime2_ps"] = 1000 * result["tau2_ns"]
    logger.info(f"Free-space lifetime {extra['lifetime_ps']:.1f} ps ({components} component)")
    return FitResult(
        result.params,
        result.uncertainties,
        result.ssr,
        result.n_eval,
        result.converged,
        result.message,
        extra,
    )
