"""Free-space doublet and cavity-transmission fits, and the σ_SD linewidth table."""

import math
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Any

import numpy as np
from loguru import logger
from scipy.signal import find_peaks, peak_widths

from ..model.lineshape import SampledCurve, voigt_eval, voigt_fwhm
from ..model.quantities import sigma_from_fwhm
from ..shared.constants import FIT_MAX_NFEV, FIT_RESTARTS, MONOTONE_SLACK
from ..shared.exceptions import NoDoubletError, PreconditionError
from ..shared.runtime import SweepRuntime
from ..shared.utils import perturbed_start, retry_fit
from .engine import FitResult, Parameter, minimize_ssr

__all__ = (
    "DOUBLET_PARAMS",
    "LinewidthTable",
    "build_linewidth_table",
    "cavity_transmission_model",
    "fit_cavity_transmission",
    "fit_freespace_spectrum",
    "freespace_spectrum_model",
    "lorentzian_share",
)

DOUBLET_PARAMS = (
    "a1",
    "a2",
    "gamma1_uev",
    "gamma2_uev",
    "omega0_uev",
    "delta_uev",
    "background",
)
_MIN_WIDTH_UEV = 1e-3


def freespace_spectrum_model(
    omega,
    a1: float,
    a2: float,
    gamma1: float,
    gamma2: float,
    omega0: float,
    delta: float,
    background: float,
    sigma_sd: float,
):
    """A₁·(𝓛_Γ₁⋆𝒢_σ)(ω−ω₀+Δ/2) + A₂·(𝓛_Γ₂⋆𝒢_σ)(ω−ω₀−Δ/2) + B, all in µeV."""
    omega = np.asarray(omega, dtype=float)
    return (
        a1 * voigt_eval(omega, gamma1, sigma_sd, omega0 - delta / 2)
        + a2 * voigt_eval(omega, gamma2, sigma_sd, omega0 + delta / 2)
        + background
    )


def cavity_transmission_model(
    omega, a: float, kappa_uev: float, sigma_vib: float, omega0: float, background: float
):
    return a * voigt_eval(np.asarray(omega, dtype=float), kappa_uev, sigma_vib, omega0) + background


def lorentzian_share(fwhm: float, sigma: float) -> float:
    """Lorentzian width Γ whose Voigt with 𝒢_σ has full width ``fwhm``.

    Inverts the Olivero–Longbothum relation; returns a small positive width
    when the Gaussian alone is already wider than ``fwhm``.
    """
    f_g = 2 * math.sqrt(2 * math.log(2)) * sigma
    if f_g >= fwhm:
        return max(0.05 * fwhm, _MIN_WIDTH_UEV)
    a, b, c = 0.5346**2 - 0.2166, -1.0692 * fwhm, fwhm * fwhm - f_g * f_g
    return (-b - math.sqrt(b * b - 4 * a * c)) / (2 * a)


def _guess_doublet(data: SampledCurve, sigma_sd: float) -> dict[str, float]:
    values = np.asarray(data.values)
    axis = data.axis
    background = float(np.min(values))
    peaks, props = find_peaks(values - background, prominence=0.0)
    if peaks.size < 2:
        raise NoDoubletError("cannot seed a doublet fit: fewer than two maxima")
    top = np.sort(peaks[np.argsort(props["prominences"])[-2:]])
    widths = peak_widths(values - background, top, rel_height=0.5)[0] * data.step
    delta = float(axis[top[1]] - axis[top[0]])
    guess = {"omega0_uev": float(axis[top[0]] + axis[top[1]]) / 2, "delta_uev": delta}
    for k, idx in enumerate(top, start=1):
        # Overlapping lines inflate the half-height width; cap it at the splitting.
        fwhm = float(min(widths[k - 1], delta))
        gamma = lorentzian_share(fwhm, sigma_sd)
        height = float(values[idx] - background)
        guess[f"gamma{k}_uev"] = gamma
        guess[f"a{k}"] = height / voigt_eval(0.0, gamma, sigma_sd)
    guess["background"] = background
    return guess


def _doublet_parameters(data: SampledCurve, init: dict[str, float]) -> list[Parameter]:
    axis = data.axis
    span = float(axis[-1] - axis[0])
    bounds = {
        "a1": (0.0, np.inf),
        "a2": (0.0, np.inf),
        "gamma1_uev": (_MIN_WIDTH_UEV, 10 * span),
        "gamma2_uev": (_MIN_WIDTH_UEV, 10 * span),
        "omega0_uev": (float(axis[0]), float(axis[-1])),
        "delta_uev": (0.0, span),
        "background": (-np.inf, np.inf),
    }
    return [
        Parameter(name, float(np.clip(init[name], *bounds[name])), *bounds[name])
        for name in DOUBLET_PARAMS
    ]


def _fit_with_restarts(
    model, data, params: list[Parameter], *, max_nfev: int, restarts: int
) -> FitResult:
    x0 = np.array([p.init for p in params])
    lower = np.array([p.lower for p in params])
    upper = np.array([p.upper for p in params])

    def attempt(n: int) -> FitResult:
        start = perturbed_start(x0, lower, upper, n)
        moved = [
            Parameter(p.name, float(v), p.lower, p.upper)
            for p, v in zip(params, start, strict=True)
        ]
        return minimize_ssr(model, data, moved, max_nfev=max_nfev)

    return retry_fit(attempt, restarts=restarts, better=lambda a, b: a.ssr < b.ssr)


def fit_freespace_spectrum(
    data: SampledCurve,
    sigma_sd: float,
    init: dict[str, float] | None = None,
    *,
    max_nfev: int = FIT_MAX_NFEV,
    restarts: int = FIT_RESTARTS,
) -> FitResult:
    """Voigt-doublet fit at a fixed spectral-diffusion width ``sigma_sd`` (µeV)."""
    if sigma_sd < 0:
        raise PreconditionError(f"sigma_sd must be >= 0, got {sigma_sd}")
    start = _guess_doublet(data, sigma_sd)
    start.update(init or {})
    params = _doublet_parameters(data, start)
    axis = data.axis

    def model(x: np.ndarray) -> np.ndarray:
        return freespace_spectrum_model(axis, *x, sigma_sd)

    result = _fit_with_restarts(model, data, params, max_nfev=max_nfev, restarts=restarts)
    logger.debug(
        f"sigma_sd={sigma_sd:g} µeV: Γ1={result['gamma1_uev']:.2f}, "
        f"Γ2={result['gamma2_uev']:.2f}, SSr={result.ssr:.4g}"
    )
    return result


@dataclass(frozen=True, slots=True)
class LinewidthTable:
    """Instantaneous linewidths Γ₁, Γ₂ (µeV) fitted at each σ_SD (µeV)."""

    sigma_sd_grid: tuple[float, ...]
    gamma1: tuple[float, ...]
    gamma2: tuple[float, ...]
    ssr: tuple[float, ...]
    converged: tuple[bool, ...]

    def __post_init__(self):
        n = len(self.sigma_sd_grid)
        if n == 0:
            raise PreconditionError("linewidth table needs at least one row")
        if any(len(col) != n for col in (self.gamma1, self.gamma2, self.ssr, self.converged)):
            raise PreconditionError("linewidth table columns differ in length")
        if np.any(np.diff(self.sigma_sd_grid) <= 0):
            raise PreconditionError("sigma_sd grid must be strictly ascending")

    def __len__(self) -> int:
        return len(self.sigma_sd_grid)

    @property
    def best_sigma_sd(self) -> float:
        return float(self.sigma_sd_grid[int(np.argmin(self.ssr))])

    def linewidth(self, line: int, sigma_sd: float) -> float:
        """Piecewise-linear Γᵢ(σ_SD) in µeV."""
        grid = np.asarray(self.sigma_sd_grid)
        if not grid[0] - 1e-9 <= sigma_sd <= grid[-1] + 1e-9:
            raise PreconditionError(
                f"sigma_sd={sigma_sd} outside table range [{grid[0]}, {grid[-1]}]"
            )
        column = self.gamma1 if line == 1 else self.gamma2
        return float(np.interp(sigma_sd, grid, column))

    def mean_linewidth(self, sigma_sd: float) -> float:
        return 0.5 * (self.linewidth(1, sigma_sd) + self.linewidth(2, sigma_sd))

    def is_monotone(self, slack: float = MONOTONE_SLACK) -> bool:
        """Γᵢ may rise by at most ``slack`` (relative) between neighbouring rows."""
        for column in (self.gamma1, self.gamma2):
            values = np.asarray(column)
            if np.any(values[1:] > values[:-1] * (1 + slack)):
                return False
        return True

    def rows(self) -> list[dict[str, Any]]:
        return [
            {
                "sigma_sd_uev": s,
                "gamma1_uev": g1,
                "gamma2_uev": g2,
                "ssr": r,
                "converged": c,
            }
            for s, g1, g2, r, c in zip(
                self.sigma_sd_grid, self.gamma1, self.gamma2, self.ssr, self.converged, strict=True
            )
        ]

    def to_json(self) -> dict[str, Any]:
        return {
            "rows": self.rows(),
            "best_sigma_sd_uev": self.best_sigma_sd,
            "monotone": self.is_monotone(),
        }


def build_linewidth_table(
    data: SampledCurve,
    sigma_sd_grid: Sequence[float],
    init: dict[str, float] | None = None,
    *,
    threads: int | None = 1,
    max_nfev: int = FIT_MAX_NFEV,
    restarts: int = FIT_RESTARTS,
) -> LinewidthTable:
    grid = [float(s) for s in sigma_sd_grid]
    if not grid:
        raise PreconditionError("sigma_sd grid is empty")
    if np.any(np.diff(grid) <= 0):
        raise PreconditionError("sigma_sd grid must be strictly ascending")

    def fit_one(sigma_sd: float) -> FitResult:
        return fit_freespace_spectrum(
            data, sigma_sd, init, max_nfev=max_nfev, restarts=restarts
        )

    runtime = SweepRuntime(threads)
    results = runtime.map(fit_one, grid)
    for sigma_sd, result in zip(grid, results, strict=True):
        if not result.converged:
            logger.warning(f"Free-space fit at sigma_sd={sigma_sd:g} µeV did not converge")
    table = LinewidthTable(
        sigma_sd_grid=tuple(grid),
        gamma1=tuple(r["gamma1_uev"] for r in results),
        gamma2=tuple(r["gamma2_uev"] for r in results),
        ssr=tuple(r.ssr for r in results),
        converged=tuple(r.converged for r in results),
    )
    if not table.is_monotone():
        logger.warning("Linewidths are not nonincreasing in sigma_sd")
    logger.info(
        f"Linewidth table: {len(table)} rows, SSr minimum at sigma_sd={table.best_sigma_sd:g} µeV"
    )
    return table


def fit_cavity_transmission(
    data: SampledCurve,
    kappa_uev: float,
    init: dict[str, float] | None = None,
    *,
    fit_kappa: bool = False,
    max_nfev: int = FIT_MAX_NFEV,
) -> FitResult:
    """A·(𝓛_ħκ ⋆ 𝒢_σvib)(ω−ω₀) + B with ħκ fixed unless ``fit_kappa``."""
    values = np.asarray(data.values)
    axis = data.axis
    background = float(np.min(values))
    peak = int(np.argmax(values))
    fwhm = float(peak_widths(values - background, [peak], rel_height=0.5)[0][0] * data.step)
    sigma0 = sigma_from_fwhm(max(fwhm - kappa_uev, 0.0))
    start = {
        "a": float(values[peak] - background) / voigt_eval(0.0, kappa_uev, sigma0),
        "kappa_uev": kappa_uev,
        "sigma_vib_uev": sigma0,
        "omega0_uev": float(axis[peak]),
        "background": background,
    }
    start.update(init or {})
    span = float(axis[-1] - axis[0])
    kappa_bounds = (_MIN_WIDTH_UEV, 10 * span) if fit_kappa else (kappa_uev, kappa_uev)
    params = [
        Parameter("a", max(start["a"], 0.0), 0.0, np.inf),
        Parameter("kappa_uev", start["kappa_uev"], *kappa_bounds),
        Parameter("sigma_vib_uev", min(start["sigma_vib_uev"], span), 0.0, span),
        Parameter("omega0_uev", start["omega0_uev"], float(axis[0]), float(axis[-1])),
        Parameter("background", start["background"]),
    ]

    def model(x: np.ndarray) -> np.ndarray:
        a, kappa, sigma, omega0, b = x
        return cavity_transmission_model(axis, a, kappa, sigma, omega0, b)

    result = minimize_ssr(model, data, params, max_nfev=max_nfev)
    width = voigt_fwhm(result["kappa_uev"], result["sigma_vib_uev"])
    logger.info(
        f"Cavity fit: σ_vib={result['sigma_vib_uev']:.1f} µeV, apparent FWHM {width:.1f} µeV"
    )
    return FitResult(
        result.params,
        result.uncertainties,
        result.ssr,
        result.n_eval,
        result.converged,
        result.message,
        {"apparent_fwhm_uev": width},
    )
