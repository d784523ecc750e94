"""Extraction of the vacuum Rabi coupling g from envelopes and decays."""

import math
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Any, Literal

import numpy as np
from loguru import logger
from scipy.stats import linregress

from ..model.dynamics import DecayModelParams, IrfKernel, decay_model_cavity
from ..model.envelope import envelope_full
from ..model.lineshape import SampledCurve
from ..model.quantities import CavityParams, EmitterParams, energy_to_rate, rate_to_energy
from ..shared.constants import FIT_MAX_NFEV
from ..shared.exceptions import ParameterDomainError, PreconditionError
from ..shared.runtime import SweepRuntime
from .engine import FitResult, Parameter, minimize_ssr
from .spectra import LinewidthTable

__all__ = (
    "CouplingSetup",
    "GCurve",
    "coupling_from_acceleration",
    "fit_decay_for_g",
    "fit_envelope_for_g",
    "g_curve_from_decay",
    "g_curve_from_envelope",
    "g_squared_regression",
)

Source = Literal["envelope", "decay"]


@dataclass(frozen=True, slots=True)
class CouplingSetup:
    """Parameters held fixed while g is fitted.

    ``kappa`` and ``gamma`` are rates (ns⁻¹); ``sigma_vib`` and ``delta`` are
    energies (µeV). ``amplitude_ratio`` is A₂/A₁ from the free-space fit.
    """

    kappa: float
    gamma: float
    sigma_vib: float
    delta: float
    storage_rate: float | None = None
    amplitude_ratio: float = 1.0

    def __post_init__(self):
        if not (self.kappa > 0 and self.gamma > 0):
            raise ParameterDomainError("kappa and gamma must be > 0")
        if self.sigma_vib < 0 or self.delta < 0 or self.amplitude_ratio < 0:
            raise ParameterDomainError("sigma_vib, delta and amplitude_ratio must be >= 0")

    def dephasing(self, table: LinewidthTable, sigma_sd: float) -> tuple[float, float]:
        """γ*ᵢ = Γᵢ(σ_SD)/ħ − γ, clipped at zero."""
        out = []
        for line in (1, 2):
            gamma_star = energy_to_rate(table.linewidth(line, sigma_sd)) - self.gamma
            if gamma_star < 0:
                logger.warning(
                    f"Line {line} at sigma_sd={sigma_sd:g} µeV is narrower than the "
                    "radiative width; pure dephasing set to 0"
                )
            out.append(max(gamma_star, 0.0))
        return out[0], out[1]

    def cavity(self, omega_a_bar: float = 0.0) -> CavityParams:
        return CavityParams(
            omega_a_bar=omega_a_bar,
            kappa=self.kappa,
            sigma_vib=self.sigma_vib,
            storage_rate=self.storage_rate,
        )


@dataclass(frozen=True, slots=True)
class GCurve:
    """Fitted g (µeV) against the instantaneous linewidth ħ(γ+γ*) (µeV)."""

    gamma_axis: tuple[float, ...]
    g_values: tuple[float, ...]
    source: Source
    sigma_sd: tuple[float, ...] = ()
    converged: tuple[bool, ...] = ()

    def __post_init__(self):
        if len(self.gamma_axis) != len(self.g_values) or not self.gamma_axis:
            raise PreconditionError("g curve needs matching, non-empty columns")
        if not np.all(np.isfinite(self.gamma_axis)) or not np.all(np.isfinite(self.g_values)):
            raise PreconditionError("g curve values must be finite")
        if np.any(np.asarray(self.g_values) < 0):
            raise PreconditionError("g values must be >= 0")
        if np.any(np.diff(self.gamma_axis) < 0):
            raise PreconditionError("g curve axis must be ascending")
        if self.source not in ("envelope", "decay"):
            raise PreconditionError(f"unknown g curve source {self.source!r}")

    @classmethod
    def from_fits(
        cls,
        source: Source,
        table: LinewidthTable,
        sigma_sd: Sequence[float],
        results: Sequence[FitResult],
    ) -> "GCurve":
        rows = sorted(
            (table.mean_linewidth(s), r["g_uev"], s, r.converged)
            for s, r in zip(sigma_sd, results, strict=True)
        )
        return cls(
            gamma_axis=tuple(r[0] for r in rows),
            g_values=tuple(r[1] for r in rows),
            source=source,
            sigma_sd=tuple(r[2] for r in rows),
            converged=tuple(r[3] for r in rows),
        )

    def rows(self) -> list[dict[str, Any]]:
        sigma = self.sigma_sd or (math.nan,) * len(self.gamma_axis)
        converged = self.converged or (True,) * len(self.gamma_axis)
        return [
            {"gamma_uev": x, "g_uev": y, "sigma_sd_uev": s, "converged": c}
            for x, y, s, c in zip(self.gamma_axis, self.g_values, sigma, converged, strict=True)
        ]


def _emitter(setup, gamma_stars, sigma_sd, omega_x_bar, a1, a2) -> EmitterParams:
    gamma_star_1, gamma_star_2 = gamma_stars
    return EmitterParams(
        omega_x_bar=omega_x_bar,
        delta=setup.delta,
        gamma=setup.gamma,
        gamma_star_1=gamma_star_1,
        gamma_star_2=gamma_star_2,
        sigma_sd=sigma_sd,
        a1=a1,
        a2=a2,
    )


def fit_envelope_for_g(
    data: SampledCurve,
    table: LinewidthTable,
    sigma_sd: float,
    setup: CouplingSetup,
    init: dict[str, float] | None = None,
    *,
    max_nfev: int = FIT_MAX_NFEV,
) -> FitResult:
    """Fit g, A₁, A₂, B, ω̄_X and ω̄_a to an envelope with γ and γ*ᵢ frozen.

    The model is divided by g² so that the amplitudes carry the overall scale
    and g is fixed by the shape alone; ``g_uev`` stays identifiable near 0.
    """
    values = np.asarray(data.values)
    axis = data.axis
    grid = data.grid
    background = float(np.min(values))
    weights = np.clip(values - background, 0.0, None)
    if weights.sum() > 0:
        centre = float(np.average(axis, weights=weights))
    else:
        centre = float(axis[int(np.argmax(values))])
    start = {
        "g_uev": 20.0,
        "a1": 1.0,
        "a2": setup.amplitude_ratio,
        "background": background,
        "omega_x_uev": centre,
    }
    start["omega_a_uev"] = start["omega_x_uev"]
    start.update(init or {})
    gamma_stars = setup.dephasing(table, sigma_sd)
    probe = envelope_full(
        _emitter(setup, gamma_stars, sigma_sd, start["omega_x_uev"], 1.0, setup.amplitude_ratio),
        setup.cavity(start["omega_a_uev"]),
        energy_to_rate(start["g_uev"]),
        grid,
        per_unit_coupling=True,
    ).values
    if "a1" not in (init or {}) and np.max(probe) > 0:
        scale = (np.max(values) - background) / np.max(probe)
        start["a1"], start["a2"] = scale, scale * setup.amplitude_ratio
    span = float(axis[-1] - axis[0])
    params = [
        Parameter("g_uev", start["g_uev"], 0.0, span),
        Parameter("a1", max(start["a1"], 0.0), 0.0, np.inf),
        Parameter("a2", max(start["a2"], 0.0), 0.0, np.inf),
        Parameter("background", start["background"]),
        Parameter("omega_x_uev", start["omega_x_uev"], float(axis[0]), float(axis[-1])),
        Parameter(
            "omega_a_uev",
            start["omega_a_uev"],
            float(axis[0]) - span,
            float(axis[-1]) + span,
        ),
    ]

    def model(x: np.ndarray) -> np.ndarray:
        g_uev, a1, a2, b, omega_x, omega_a = x
        if a1 + a2 <= 0:
            return np.full(grid.n, b)
        emitter = _emitter(setup, gamma_stars, sigma_sd, omega_x, a1, a2)
        curve = envelope_full(
            emitter, setup.cavity(omega_a), energy_to_rate(g_uev), grid, per_unit_coupling=True
        )
        return curve.values + b

    result = minimize_ssr(model, data, params, max_nfev=max_nfev)
    logger.info(
        f"Envelope fit at sigma_sd={sigma_sd:g} µeV: g={result['g_uev']:.2f} µeV "
        f"(converged={result.converged})"
    )
    return result


def fit_decay_for_g(
    data: SampledCurve,
    irf: IrfKernel,
    table: LinewidthTable,
    sigma_sd: float,
    setup: CouplingSetup,
    init: dict[str, float] | None = None,
    *,
    max_nfev: int = FIT_MAX_NFEV,
) -> FitResult:
    """Fit g, the total amplitude, the long component, t₀ and B to a cavity decay.

    ``data`` is on a ns axis. A₂/A₁ is held at ``setup.amplitude_ratio``, and
    as in the envelope fit the short decay is divided by g².
    """
    values = np.asarray(data.values)
    axis = data.axis
    grid = data.grid
    peak = int(np.argmax(values))
    lead = max(peak // 5, 1)
    irf_peak = float(irf.curve.axis[int(np.argmax(irf.curve.values))])
    start = {
        "g_uev": 20.0,
        "amplitude": 1.0,
        "a_long": 0.0,
        "gamma_long": 1.0,
        "t0_ns": float(axis[peak]) - irf_peak,
        "background": float(np.median(values[:lead])),
    }
    start.update(init or {})
    ratio = setup.amplitude_ratio
    gamma_star_1, gamma_star_2 = setup.dephasing(table, sigma_sd)

    def build(x: np.ndarray) -> DecayModelParams:
        g_uev, amplitude, a_long, gamma_long, t0, background = x
        # EmitterParams needs a positive total amplitude.
        amplitude = max(amplitude, 1e-300)
        emitter = EmitterParams(
            omega_x_bar=0.0,
            delta=setup.delta,
            gamma=setup.gamma,
            gamma_star_1=gamma_star_1,
            gamma_star_2=gamma_star_2,
            sigma_sd=sigma_sd,
            a1=amplitude / (1 + ratio),
            a2=amplitude * ratio / (1 + ratio),
        )
        return DecayModelParams(
            emitter=emitter,
            cavity=setup.cavity(0.0),
            g=energy_to_rate(g_uev),
            a_long=a_long,
            gamma_long=gamma_long,
            t0=t0,
            background=background,
        )

    def model(x: np.ndarray) -> np.ndarray:
        return decay_model_cavity(build(x), irf, grid, per_unit_coupling=True).values

    if "amplitude" not in (init or {}):
        keys = ("g_uev", "amplitude", "a_long", "gamma_long", "t0_ns")
        probe = model(np.array([start[k] for k in keys] + [0.0]))
        if np.max(probe) > 0:
            start["amplitude"] = (values[peak] - start["background"]) / np.max(probe)
    span = float(axis[-1] - axis[0])
    params = [
        Parameter("g_uev", start["g_uev"], 0.0, rate_to_energy(setup.kappa) * 10),
        Parameter("amplitude", max(start["amplitude"], 0.0), 0.0, np.inf),
        Parameter("a_long", start["a_long"], 0.0, np.inf),
        Parameter("gamma_long", start["gamma_long"], 0.0, 100 / span),
        Parameter("t0_ns", float(np.clip(start["t0_ns"], axis[0], axis[-1])), axis[0], axis[-1]),
        Parameter("background", start["background"]),
    ]
    result = minimize_ssr(model, data, params, max_nfev=max_nfev)
    logger.info(
        f"Decay fit at sigma_sd={sigma_sd:g} µeV: g={result['g_uev']:.2f} µeV "
        f"(converged={result.converged})"
    )
    return result


def _sweep(fit_one, sigma_sd_grid, threads):
    grid = [float(s) for s in sigma_sd_grid]
    if not grid:
        raise PreconditionError("sigma_sd grid is empty")
    return grid, SweepRuntime(threads).map(fit_one, grid)


def g_curve_from_envelope(
    data: SampledCurve,
    table: LinewidthTable,
    setup: CouplingSetup,
    sigma_sd_grid: Sequence[float] | None = None,
    *,
    threads: int | None = 1,
    max_nfev: int = FIT_MAX_NFEV,
) -> GCurve:
    grid, results = _sweep(
        lambda s: fit_envelope_for_g(data, table, s, setup, max_nfev=max_nfev),
        table.sigma_sd_grid if sigma_sd_grid is None else sigma_sd_grid,
        threads,
    )
    return GCurve.from_fits("envelope", table, grid, results)


def g_curve_from_decay(
    data: SampledCurve,
    irf: IrfKernel,
    table: LinewidthTable,
    setup: CouplingSetup,
    sigma_sd_grid: Sequence[float] | None = None,
    *,
    threads: int | None = 1,
    max_nfev: int = FIT_MAX_NFEV,
) -> GCurve:
    grid, results = _sweep(
        lambda s: fit_decay_for_g(data, irf, table, s, setup, max_nfev=max_nfev),
        table.sigma_sd_grid if sigma_sd_grid is None else sigma_sd_grid,
        threads,
    )
    return GCurve.from_fits("decay", table, grid, results)


def coupling_from_acceleration(
    gamma_cav: float, gamma: float, gamma_star: float, kappa: float
) -> float:
    """g (ns⁻¹) from 4g² = (γ_cav − γ)(γ + γ* + κ), at zero detuning."""
    acceleration = gamma_cav - gamma
    if acceleration < 0:
        raise ParameterDomainError("cavity decay rate is below the free-space rate")
    return 0.5 * math.sqrt(acceleration * (gamma + gamma_star + kappa))


def g_squared_regression(
    lambda3_over_v: Sequence[float], g_values: Sequence[float]
) -> dict[str, float]:
    """Linear regression of g² on λ³/V."""
    x = np.asarray(lambda3_over_v, dtype=float)
    y = np.asarray(g_values, dtype=float) ** 2
    if x.size < 3 or x.size != y.size:
        raise PreconditionError("g² regression needs at least three matching points")
    fit = linregress(x, y)
    return {
        "slope": float(fit.slope),
        "intercept": float(fit.intercept),
        "r_squared": float(fit.rvalue**2),
        "slope_stderr": float(fit.stderr),
    }
