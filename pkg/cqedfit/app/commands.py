"""One handler per CLI subcommand.

Handlers read everything from the loaded Config, write their artifacts
through the ArtifactStore and return the result record printed on stdout.
"""

import math
from collections.abc import Callable
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from loguru import logger

from ..fitting.coupling import (
    CouplingSetup,
    GCurve,
    fit_decay_for_g,
    fit_envelope_for_g,
    g_curve_from_decay,
    g_curve_from_envelope,
)
from ..fitting.crossing import find_crossing
from ..fitting.lifetime import fit_freespace_decay
from ..fitting.power import fit_power_law, fit_saturation
from ..fitting.purcell import (
    acceleration_from_purcell,
    purcell_from_acceleration,
    purcell_theoretical,
    quantum_yield,
)
from ..fitting.spectra import (
    DOUBLET_PARAMS,
    build_linewidth_table,
    cavity_transmission_model,
    fit_cavity_transmission,
    fit_freespace_spectrum,
    freespace_spectrum_model,
)
from ..model.dynamics import (
    DecayModelParams,
    IrfKernel,
    decay_model_cavity,
    decay_model_freespace,
    gaussian_irf,
)
from ..model.envelope import dip_value, envelope_full
from ..model.lineshape import GridSpec, SampledCurve
from ..model.quantities import (
    CavityParams,
    EmitterParams,
    cavity_quality_factor,
    energy_to_rate,
)
from ..oracle.synth import synth_generate
from ..oracle.verify import run_verify
from ..shared.config import Config, expand_grid
from ..shared.config_keys import ConfigKeys
from ..shared.constants import (
    EXIT_FIT_NON_CONVERGENCE,
    EXIT_OK,
    TIME_STEP_NS,
)
from ..shared.exceptions import ConfigurationError, NoDoubletError
from ..shared.utils import default_threads
from ..store.curves import read_curve, read_g_curve, read_linewidth_table, read_series
from ..store.records import ArtifactStore

__all__ = ("COMMANDS", "CommandContext", "CommandResult", "RunOptions")

_PS_PER_NS = 1000.0


@dataclass(frozen=True, slots=True)
class RunOptions:
    config_path: str | None = None
    out_dir: str | None = None
    seed: int | None = None
    threads: int | None = None
    checks: tuple[str, ...] = ()
    perturbation: float = 0.0


@dataclass(slots=True)
class CommandContext:
    config: Config
    store: ArtifactStore
    options: RunOptions = field(default_factory=RunOptions)

    @property
    def threads(self) -> int:
        return self.config.get(ConfigKeys.RUN_THREADS) or default_threads()

    @property
    def seed(self) -> int:
        return int(self.config.get(ConfigKeys.RUN_SEED))

    @property
    def max_nfev(self) -> int:
        return int(self.config.get(ConfigKeys.FIT_MAX_NFEV))

    @property
    def restarts(self) -> int:
        return int(self.config.get(ConfigKeys.FIT_RESTARTS))

    def optional_float(self, key: str) -> float | None:
        value = self.config.get(key)
        return None if value is None else float(value)


@dataclass(frozen=True, slots=True)
class CommandResult:
    record: dict[str, Any]
    exit_code: int = EXIT_OK


Handler = Callable[[CommandContext], CommandResult]

COMMANDS: dict[str, Handler] = {}


def command(name: str):
    def decorator(fn: Handler) -> Handler:
        COMMANDS[name] = fn
        return fn

    return decorator


def _status(*converged: bool) -> int:
    return EXIT_OK if all(converged) else EXIT_FIT_NON_CONVERGENCE


def _explicit_sigma_grid(ctx: CommandContext) -> list[float] | None:
    """The σ_SD grid from the config file, or None to use the table's own rows."""
    value = ctx.config.get(ConfigKeys.GRID_SIGMA_SD, None)
    return None if value is None else expand_grid(value, ConfigKeys.GRID_SIGMA_SD)


def _read_irf(ctx: CommandContext) -> IrfKernel:
    times_ps, counts = read_series(ctx.config.resolve_input(ConfigKeys.INPUT_IRF))
    return IrfKernel.from_histogram(times_ps / _PS_PER_NS, counts)


def _radiative_rate(ctx: CommandContext) -> tuple[float, dict[str, Any]]:
    """γ in ns⁻¹ from ``physics.tau_fs_ps`` or from a free-space decay fit."""
    tau_ps = ctx.optional_float(ConfigKeys.PHYSICS_TAU_FS_PS)
    if tau_ps is not None:
        return _PS_PER_NS / tau_ps, {"source": "config", "tau_fs_ps": tau_ps}
    if ctx.config.get(ConfigKeys.INPUT_FREE_SPACE_DECAY) is None:
        raise ConfigurationError(
            "radiative rate needs physics.tau_fs_ps or inputs.free_space_decay"
        )
    data = read_curve(ctx.config.resolve_input(ConfigKeys.INPUT_FREE_SPACE_DECAY), "ps")
    result = fit_freespace_decay(data, _read_irf(ctx), max_nfev=ctx.max_nfev)
    return 1.0 / result["tau_ns"], {"source": "fit", "fit": result.to_json()}


def _coupling_setup(ctx: CommandContext, gamma: float) -> CouplingSetup:
    storage_ps = ctx.optional_float(ConfigKeys.PHYSICS_STORAGE_TIME_PS)
    return CouplingSetup(
        kappa=energy_to_rate(ctx.config.get_float(ConfigKeys.PHYSICS_KAPPA_UEV)),
        gamma=gamma,
        sigma_vib=ctx.config.get_float(ConfigKeys.PHYSICS_SIGMA_VIB_UEV),
        delta=ctx.config.get_float(ConfigKeys.PHYSICS_DELTA_UEV),
        storage_rate=None if storage_ps is None else _PS_PER_NS / storage_ps,
        amplitude_ratio=ctx.config.get_float(ConfigKeys.PHYSICS_AMPLITUDE_RATIO),
    )


def _curve_record(curve: GCurve, expected: str) -> dict[str, Any]:
    steps = np.diff(curve.g_values)
    monotone = bool(np.all(steps < 0) if expected == "decreasing" else np.all(steps > 0))
    if not monotone:
        logger.warning(f"{curve.source} g curve is not {expected} in the linewidth")
    return {
        "source": curve.source,
        "rows": curve.rows(),
        "expected_trend": expected,
        "trend_holds": monotone,
    }


@command("fit-spectrum")
def cmd_fit_spectrum(ctx: CommandContext) -> CommandResult:
    data = read_curve(ctx.config.resolve_input(ConfigKeys.INPUT_SPECTRUM), "uev")
    grid = ctx.config.get_grid(ConfigKeys.GRID_SIGMA_SD)
    table = build_linewidth_table(
        data, grid, threads=ctx.threads, max_nfev=ctx.max_nfev, restarts=ctx.restarts
    )
    ctx.store.write_linewidth_table("linewidth_table.csv", table)
    ctx.store.write_columns(
        "ssr_curve.csv", ["sigma_sd_uev", "ssr"], [table.sigma_sd_grid, table.ssr]
    )
    best = fit_freespace_spectrum(
        data, table.best_sigma_sd, max_nfev=ctx.max_nfev, restarts=ctx.restarts
    )
    model = freespace_spectrum_model(
        data.axis, *(best[k] for k in DOUBLET_PARAMS), table.best_sigma_sd
    )
    ctx.store.write_curve("spectrum_fit.csv", data, "counts", model=model)
    record = {
        "command": "fit-spectrum",
        "table": table.to_json(),
        "best_fit": best.to_json(),
        "amplitude_ratio": best["a2"] / best["a1"] if best["a1"] > 0 else math.nan,
        "artifacts": ctx.store.manifest(),
    }
    return CommandResult(record, _status(*table.converged, best.converged))


@command("fit-cavity")
def cmd_fit_cavity(ctx: CommandContext) -> CommandResult:
    data = read_curve(ctx.config.resolve_input(ConfigKeys.INPUT_TRANSMISSION), "uev")
    kappa_uev = ctx.config.get_float(ConfigKeys.PHYSICS_KAPPA_UEV)
    result = fit_cavity_transmission(data, kappa_uev, max_nfev=ctx.max_nfev)
    names = ("a", "kappa_uev", "sigma_vib_uev", "omega0_uev", "background")
    model = cavity_transmission_model(data.axis, *(result[k] for k in names))
    ctx.store.write_curve("transmission_fit.csv", data, "counts", model=model)
    record: dict[str, Any] = {"command": "fit-cavity", "fit": result.to_json()}
    wavelength = ctx.optional_float(ConfigKeys.PHYSICS_WAVELENGTH_NM)
    if wavelength is not None:
        record["q_cav"] = cavity_quality_factor(wavelength, energy_to_rate(kappa_uev))
    record["artifacts"] = ctx.store.manifest()
    return CommandResult(record, _status(result.converged))


@command("fit-envelope")
def cmd_fit_envelope(ctx: CommandContext) -> CommandResult:
    data = read_curve(ctx.config.resolve_input(ConfigKeys.INPUT_ENVELOPE), "uev")
    table = read_linewidth_table(ctx.config.resolve_input(ConfigKeys.INPUT_LINEWIDTH_TABLE))
    gamma, gamma_source = _radiative_rate(ctx)
    setup = _coupling_setup(ctx, gamma)
    curve = g_curve_from_envelope(
        data, table, setup, _explicit_sigma_grid(ctx), threads=ctx.threads, max_nfev=ctx.max_nfev
    )
    ctx.store.write_g_curve("g_curve_envelope.csv", curve)
    best = fit_envelope_for_g(data, table, table.best_sigma_sd, setup, max_nfev=ctx.max_nfev)
    try:
        dip = dip_value(data, setup.delta, setup.sigma_vib or None).to_json()
    except NoDoubletError as e:
        logger.warning(f"Envelope dip not evaluated: {e}")
        dip = None
    record = {
        "command": "fit-envelope",
        "radiative_rate": gamma_source,
        "g_curve": _curve_record(curve, "decreasing"),
        "best_sigma_sd_fit": best.to_json(),
        "dip": dip,
        "artifacts": ctx.store.manifest(),
    }
    return CommandResult(record, _status(*curve.converged, best.converged))


@command("fit-decay")
def cmd_fit_decay(ctx: CommandContext) -> CommandResult:
    data = read_curve(ctx.config.resolve_input(ConfigKeys.INPUT_DECAY), "ps")
    table = read_linewidth_table(ctx.config.resolve_input(ConfigKeys.INPUT_LINEWIDTH_TABLE))
    irf = _read_irf(ctx)
    gamma, gamma_source = _radiative_rate(ctx)
    setup = _coupling_setup(ctx, gamma)
    curve = g_curve_from_decay(
        data, irf, table, setup, _explicit_sigma_grid(ctx), threads=ctx.threads, max_nfev=ctx.max_nfev
    )
    ctx.store.write_g_curve("g_curve_decay.csv", curve)
    best = fit_decay_for_g(data, irf, table, table.best_sigma_sd, setup, max_nfev=ctx.max_nfev)
    record = {
        "command": "fit-decay",
        "radiative_rate": gamma_source,
        "g_curve": _curve_record(curve, "increasing"),
        "best_sigma_sd_fit": best.to_json(),
        "artifacts": ctx.store.manifest(),
    }
    return CommandResult(record, _status(*curve.converged, best.converged))


@command("cross")
def cmd_cross(ctx: CommandContext) -> CommandResult:
    env = read_g_curve(ctx.config.resolve_input(ConfigKeys.INPUT_G_CURVE_ENVELOPE), "envelope")
    dec = read_g_curve(ctx.config.resolve_input(ConfigKeys.INPUT_G_CURVE_DECAY), "decay")
    result = find_crossing(env, dec)
    ctx.store.write_json("crossing.json", result)
    record = {"command": "cross", **result.to_json(), "artifacts": ctx.store.manifest()}
    return CommandResult(record)


@command("purcell")
def cmd_purcell(ctx: CommandContext) -> CommandResult:
    get = ctx.optional_float
    record: dict[str, Any] = {"command": "purcell"}
    tau_fs, tau_cav, eta_qy = (
        get(ConfigKeys.PHYSICS_TAU_FS_PS),
        get(ConfigKeys.PHYSICS_TAU_CAV_PS),
        get(ConfigKeys.PHYSICS_ETA_QY),
    )
    if tau_fs is not None and tau_cav is not None and eta_qy is not None:
        f_p = purcell_from_acceleration(tau_fs, tau_cav, eta_qy)
        record["measured"] = {
            "acceleration": tau_fs / tau_cav,
            "purcell_factor": f_p,
            "check_acceleration": acceleration_from_purcell(f_p, eta_qy),
        }
    wavelength = get(ConfigKeys.PHYSICS_WAVELENGTH_NM)
    q_cav = get(ConfigKeys.PHYSICS_Q_CAV)
    if q_cav is None and wavelength is not None:
        q_cav = cavity_quality_factor(
            wavelength, energy_to_rate(ctx.config.get_float(ConfigKeys.PHYSICS_KAPPA_UEV))
        )
    l3v, volume = get(ConfigKeys.PHYSICS_LAMBDA3_OVER_V), get(ConfigKeys.PHYSICS_VOLUME_UM3)
    if q_cav is not None and (l3v is not None or (wavelength and volume)):
        q_em = get(ConfigKeys.PHYSICS_Q_EM) or math.inf
        record["theoretical"] = {
            "q_cav": q_cav,
            "q_em": q_em,
            "purcell_factor": purcell_theoretical(
                wavelength,
                ctx.config.get_float(ConfigKeys.PHYSICS_REFRACTIVE_INDEX),
                q_cav,
                q_em,
                l3v,
                volume_um3=volume,
            ),
        }
    if len(record) == 1:
        raise ConfigurationError(
            "purcell needs tau_fs_ps/tau_cav_ps/eta_qy or q_cav (or wavelength) with lambda3_over_v"
        )
    ctx.store.write_json("purcell.json", record)
    record["artifacts"] = ctx.store.manifest()
    return CommandResult(record)


@command("saturation")
def cmd_saturation(ctx: CommandContext) -> CommandResult:
    power, intensity = read_series(ctx.config.resolve_input(ConfigKeys.INPUT_SATURATION))
    result = fit_saturation(power, intensity, max_nfev=ctx.max_nfev)
    record: dict[str, Any] = {"command": "saturation", "fit": result.to_json()}
    eta_col = ctx.optional_float(ConfigKeys.PHYSICS_ETA_COL)
    if eta_col is not None:
        record["quantum_yield"] = quantum_yield(result["i_sat"], eta_col)
    ctx.store.write_json("saturation.json", record)
    record["artifacts"] = ctx.store.manifest()
    return CommandResult(record, _status(result.converged))


@command("powerlaw")
def cmd_powerlaw(ctx: CommandContext) -> CommandResult:
    key = ConfigKeys.INPUT_POWER_SERIES
    if ctx.config.get(key) is None:
        key = ConfigKeys.INPUT_SATURATION
    power, intensity = read_series(ctx.config.resolve_input(key))
    result = fit_power_law(power, intensity)
    record = {"command": "powerlaw", "fit": result.to_json()}
    ctx.store.write_json("powerlaw.json", record)
    record["artifacts"] = ctx.store.manifest()
    return CommandResult(record)


def _config_grid(ctx: CommandContext, key: str, default: GridSpec, scale: float = 1.0) -> GridSpec:
    value = ctx.config.get(key)
    if value is None:
        return default
    values = np.asarray(expand_grid(value, key)) * scale
    if values.size < 2:
        raise ConfigurationError(f"{key} needs at least two points")
    try:
        return GridSpec.from_axis(values)
    except ValueError as e:
        raise ConfigurationError(f"{key} must be uniform: {e}") from e


@command("simulate")
def cmd_simulate(ctx: CommandContext) -> CommandResult:
    """Synthetic spectrum, transmission, envelope, IRF and decays from ``simulate.*``."""
    get = ctx.config.get_float
    g_uev = get(ConfigKeys.SIMULATE_G_UEV)
    sigma_sd = get(ConfigKeys.SIMULATE_SIGMA_SD_UEV)
    linewidth = get(ConfigKeys.SIMULATE_LINEWIDTH_UEV)
    counts = get(ConfigKeys.SIMULATE_TOTAL_COUNTS)
    kappa_uev = get(ConfigKeys.PHYSICS_KAPPA_UEV)
    sigma_vib = get(ConfigKeys.PHYSICS_SIGMA_VIB_UEV)
    delta = get(ConfigKeys.PHYSICS_DELTA_UEV)
    ratio = get(ConfigKeys.PHYSICS_AMPLITUDE_RATIO)
    tau_fs_ps = ctx.optional_float(ConfigKeys.PHYSICS_TAU_FS_PS) or 121.0
    storage_ps = ctx.optional_float(ConfigKeys.PHYSICS_STORAGE_TIME_PS)
    gamma = _PS_PER_NS / tau_fs_ps
    gamma_star = energy_to_rate(linewidth) - gamma
    if gamma_star < 0:
        raise ConfigurationError("simulate.linewidth_uev is below the radiative width")
    seed = ctx.seed

    half = delta / 2 + 4 * (linewidth + sigma_sd + kappa_uev + sigma_vib)
    energy = _config_grid(ctx, ConfigKeys.GRID_ENERGY, GridSpec.centered(0.0, half, 2.0))
    time = _config_grid(
        ctx,
        ConfigKeys.GRID_TIME,
        GridSpec.spanning(-0.3, 3.0, TIME_STEP_NS),
        scale=1 / _PS_PER_NS,
    )
    emitter = EmitterParams(
        omega_x_bar=0.0,
        delta=delta,
        gamma=gamma,
        gamma_star_1=gamma_star,
        gamma_star_2=gamma_star,
        sigma_sd=sigma_sd,
        a1=1.0 / (1 + ratio),
        a2=ratio / (1 + ratio),
    )
    cavity = CavityParams(
        omega_a_bar=0.0,
        kappa=energy_to_rate(kappa_uev),
        sigma_vib=sigma_vib,
        storage_rate=None if storage_ps is None else _PS_PER_NS / storage_ps,
    )
    irf = gaussian_irf(get(ConfigKeys.SIMULATE_IRF_FWHM_PS) / _PS_PER_NS, time.step)
    models = {
        "spectrum": (
            SampledCurve.on(
                energy,
                freespace_spectrum_model(
                    energy.axis, emitter.a1, emitter.a2, linewidth, linewidth, 0.0, delta, 0.0, sigma_sd
                ),
            ),
            "uev",
        ),
        "transmission": (
            SampledCurve.on(
                energy, cavity_transmission_model(energy.axis, 1.0, kappa_uev, sigma_vib, 0.0, 0.0)
            ),
            "uev",
        ),
        "envelope": (envelope_full(emitter, cavity, energy_to_rate(g_uev), energy), "uev"),
        "irf": (irf.curve, "ps"),
        "decay": (
            decay_model_cavity(DecayModelParams(emitter, cavity, energy_to_rate(g_uev)), irf, time),
            "ps",
        ),
        "free_space_decay": (decay_model_freespace(1.0, 1 / gamma, 0.0, 0.0, irf, time), "ps"),
    }
    inputs = {}
    for index, (name, (model, unit)) in enumerate(models.items()):
        synthetic = synth_generate(model, counts, (seed, index))
        path = ctx.store.write_curve(f"{name}.csv", synthetic, "counts", unit)
        inputs[name] = path.name
    truth = {
        "g_uev": g_uev,
        "sigma_sd_uev": sigma_sd,
        "linewidth_uev": linewidth,
        "tau_fs_ps": tau_fs_ps,
        "emitter": emitter.to_json(),
        "cavity": cavity.to_json(),
        "seed": seed,
    }
    ctx.store.write_json("truth.json", truth)
    pipeline = {
        "inputs": {**inputs, "linewidth_table": "linewidth_table.csv"},
        "physics": {
            "kappa_uev": kappa_uev,
            "sigma_vib_uev": sigma_vib,
            "delta_uev": delta,
            "tau_fs_ps": tau_fs_ps,
            "amplitude_ratio": ratio,
            **({"storage_time_ps": storage_ps} if storage_ps is not None else {}),
        },
    }
    ctx.store.write_json("pipeline.json", pipeline)
    return CommandResult(
        {"command": "simulate", "truth": truth, "artifacts": ctx.store.manifest()}
    )


@command("verify")
def cmd_verify(ctx: CommandContext) -> CommandResult:
    report = run_verify(
        ctx.options.checks or None, seed=ctx.seed, perturbation=ctx.options.perturbation
    )
    ctx.store.write_json("verify_report.json", report)
    record = {"command": "verify", **report, "artifacts": ctx.store.manifest()}
    return CommandResult(record, EXIT_OK if report["passed"] else EXIT_FIT_NON_CONVERGENCE)
