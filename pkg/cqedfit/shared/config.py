import math
import os
from dataclasses import dataclass
from functools import reduce
from pathlib import Path
from typing import Any

import anyio
import yaml

from .config_keys import ConfigKeys
from .constants import (
    FIT_MAX_NFEV,
    FIT_RESTARTS,
    SIGMA_SD_GRID_START_UEV,
    SIGMA_SD_GRID_STEP_UEV,
    SIGMA_SD_GRID_STOP_UEV,
)
from .exceptions import ConfigurationError, InputNotFoundError

__all__ = ("Config", "expand_grid")

_MISSING = object()
_ENV_PREFIX = "CQEDFIT_"


@dataclass(frozen=True, slots=True)
class _ConfigItem:
    key: str
    types: tuple[type, ...]
    desc: str
    default: Any = None
    env: str | None = None
    env_type: type = str


def _item(key, types, desc, default=None, env_type=str) -> _ConfigItem:
    env = _ENV_PREFIX + key.replace(".", "_").upper()
    return _ConfigItem(key, types, desc, default, env=env, env_type=env_type)


_NUMBER = (int, float)
_GRID = (dict, list)

_CONFIG_ITEMS = (
    _item(ConfigKeys.INPUT_SPECTRUM, (str,), "free-space spectrum CSV"),
    _item(ConfigKeys.INPUT_TRANSMISSION, (str,), "cavity transmission CSV"),
    _item(ConfigKeys.INPUT_ENVELOPE, (str,), "spectral envelope CSV"),
    _item(ConfigKeys.INPUT_DECAY, (str,), "cavity decay CSV"),
    _item(ConfigKeys.INPUT_FREE_SPACE_DECAY, (str,), "free-space decay CSV"),
    _item(ConfigKeys.INPUT_IRF, (str,), "IRF histogram CSV"),
    _item(ConfigKeys.INPUT_LINEWIDTH_TABLE, (str,), "linewidth table CSV"),
    _item(ConfigKeys.INPUT_SATURATION, (str,), "power/intensity CSV"),
    _item(ConfigKeys.INPUT_POWER_SERIES, (str,), "power-law power/intensity CSV"),
    _item(ConfigKeys.INPUT_G_CURVE_ENVELOPE, (str,), "envelope g curve CSV"),
    _item(ConfigKeys.INPUT_G_CURVE_DECAY, (str,), "decay g curve CSV"),
    _item(ConfigKeys.PHYSICS_KAPPA_UEV, _NUMBER, "cavity linewidth (ueV)", 110.0, float),
    _item(ConfigKeys.PHYSICS_SIGMA_VIB_UEV, _NUMBER, "vibration width (ueV)", 0.0, float),
    _item(ConfigKeys.PHYSICS_DELTA_UEV, _NUMBER, "doublet splitting (ueV)", 700.0, float),
    _item(ConfigKeys.PHYSICS_TAU_FS_PS, _NUMBER, "free-space lifetime (ps)", None, float),
    _item(ConfigKeys.PHYSICS_TAU_CAV_PS, _NUMBER, "cavity lifetime (ps)", None, float),
    _item(ConfigKeys.PHYSICS_STORAGE_TIME_PS, _NUMBER, "photon storage time (ps)", None, float),
    _item(ConfigKeys.PHYSICS_ETA_QY, _NUMBER, "radiative quantum yield", None, float),
    _item(ConfigKeys.PHYSICS_ETA_COL, _NUMBER, "collection efficiency", None, float),
    _item(ConfigKeys.PHYSICS_WAVELENGTH_NM, _NUMBER, "emission wavelength (nm)", None, float),
    _item(ConfigKeys.PHYSICS_REFRACTIVE_INDEX, _NUMBER, "refractive index", 1.0, float),
    _item(ConfigKeys.PHYSICS_Q_CAV, _NUMBER, "cavity quality factor", None, float),
    _item(ConfigKeys.PHYSICS_Q_EM, _NUMBER, "emitter quality factor", None, float),
    _item(ConfigKeys.PHYSICS_LAMBDA3_OVER_V, _NUMBER, "lambda^3/V", None, float),
    _item(ConfigKeys.PHYSICS_VOLUME_UM3, _NUMBER, "mode volume (um^3)", None, float),
    _item(ConfigKeys.PHYSICS_AMPLITUDE_RATIO, _NUMBER, "doublet amplitude ratio A2/A1", 1.0, float),
    _item(
        ConfigKeys.GRID_SIGMA_SD,
        _GRID,
        "sigma_SD grid (ueV)",
        {
            "start": SIGMA_SD_GRID_START_UEV,
            "stop": SIGMA_SD_GRID_STOP_UEV,
            "step": SIGMA_SD_GRID_STEP_UEV,
        },
    ),
    _item(ConfigKeys.GRID_ENERGY, _GRID, "energy grid (ueV)"),
    _item(ConfigKeys.GRID_TIME, _GRID, "time grid (ps)"),
    _item(ConfigKeys.FIT_MAX_NFEV, (int,), "max model evaluations per fit", FIT_MAX_NFEV, int),
    _item(ConfigKeys.FIT_RESTARTS, (int,), "restarts of non-converged fits", FIT_RESTARTS, int),
    _item(ConfigKeys.SIMULATE_G_UEV, _NUMBER, "simulated coupling (ueV)", 40.0, float),
    _item(ConfigKeys.SIMULATE_SIGMA_SD_UEV, _NUMBER, "simulated sigma_SD (ueV)", 70.0, float),
    _item(ConfigKeys.SIMULATE_LINEWIDTH_UEV, _NUMBER, "simulated instantaneous linewidth (ueV)", 250.0, float),
    _item(ConfigKeys.SIMULATE_TOTAL_COUNTS, (int,), "simulated total counts", 1_000_000, int),
    _item(ConfigKeys.SIMULATE_IRF_FWHM_PS, _NUMBER, "simulated IRF FWHM (ps)", 40.0, float),
    _item(ConfigKeys.RUN_SEED, (int,), "random seed", 0, int),
    _item(ConfigKeys.RUN_THREADS, (int,), "worker threads"),
    _item(ConfigKeys.RUN_OUT_DIR, (str,), "output directory", "out"),
    _item(ConfigKeys.LOG_PATH, (str,), "log path"),
    _item(ConfigKeys.LOG_LEVEL, (str,), "log level", "INFO"),
)

_CONFIG_DEFAULTS = {item.key: item.default for item in _CONFIG_ITEMS}

_POSITIVE_KEYS = (
    ConfigKeys.PHYSICS_KAPPA_UEV,
    ConfigKeys.PHYSICS_TAU_FS_PS,
    ConfigKeys.PHYSICS_TAU_CAV_PS,
    ConfigKeys.PHYSICS_STORAGE_TIME_PS,
    ConfigKeys.PHYSICS_ETA_QY,
    ConfigKeys.PHYSICS_ETA_COL,
    ConfigKeys.PHYSICS_WAVELENGTH_NM,
    ConfigKeys.PHYSICS_REFRACTIVE_INDEX,
    ConfigKeys.PHYSICS_Q_CAV,
    ConfigKeys.PHYSICS_Q_EM,
    ConfigKeys.PHYSICS_LAMBDA3_OVER_V,
    ConfigKeys.PHYSICS_VOLUME_UM3,
    ConfigKeys.SIMULATE_LINEWIDTH_UEV,
    ConfigKeys.SIMULATE_TOTAL_COUNTS,
    ConfigKeys.SIMULATE_IRF_FWHM_PS,
    ConfigKeys.FIT_MAX_NFEV,
)

_NONNEGATIVE_KEYS = (
    ConfigKeys.PHYSICS_SIGMA_VIB_UEV,
    ConfigKeys.PHYSICS_DELTA_UEV,
    ConfigKeys.PHYSICS_AMPLITUDE_RATIO,
    ConfigKeys.SIMULATE_G_UEV,
    ConfigKeys.SIMULATE_SIGMA_SD_UEV,
    ConfigKeys.FIT_RESTARTS,
    ConfigKeys.RUN_SEED,
)


def expand_grid(value: Any, desc: str) -> list[float]:
    """Expand a `{start, stop, step}` object or an explicit list into values.

    The stop value is included when it lies on the grid.
    """
    if isinstance(value, list):
        try:
            values = [float(v) for v in value]
        except (TypeError, ValueError) as e:
            raise ConfigurationError(f"{desc} must contain numbers") from e
    elif isinstance(value, dict):
        try:
            start = float(value["start"])
            stop = float(value["stop"])
            step = float(value["step"])
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigurationError(f"{desc} needs numeric start/stop/step") from e
        if step <= 0 or stop < start:
            raise ConfigurationError(f"{desc} needs step > 0 and stop >= start")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        values = [start + i * step for i in range(count)]
    else:
        raise ConfigurationError(f"invalid config type: {desc}")
    if not values:
        raise ConfigurationError(f"{desc} must not be empty")
    if not all(math.isfinite(v) for v in values):
        raise ConfigurationError(f"{desc} must be finite")
    if any(b <= a for a, b in zip(values, values[1:], strict=False)):
        raise ConfigurationError(f"{desc} must be strictly ascending")
    return values


class Config:
    def __init__(self, config_path: str | None = None):
        self.config_path = config_path or os.environ.get("CQEDFIT_CONFIG")
        self.data: dict[str, Any] = {}

    async def load(self) -> None:
        self.data = {}
        if self.config_path:
            config_path = Path(self.config_path)
            if not config_path.exists():
                raise InputNotFoundError(f"config file not found: {config_path}")
            try:
                if not config_path.is_file():
                    raise ConfigurationError(
                        f"config path is not a file: {config_path}"
                    )
                async with await anyio.open_file(
                    config_path, "r", encoding="utf-8"
                ) as f:
                    content = await f.read()
                self.data = yaml.safe_load(content) or {}
                if not isinstance(self.data, dict):
                    raise ConfigurationError("config file root node must be an object")
            except UnicodeDecodeError as e:
                raise ConfigurationError(f"Config file decode error: {e}") from e
            except yaml.YAMLError as e:
                raise ConfigurationError(f"Config parse error: {e}") from e
            except OSError as e:
                raise ConfigurationError(f"Config file read error: {e}") from e
        self._override_from_env()
        self.validate()

    def _override_from_env(self) -> None:
        for item in _CONFIG_ITEMS:
            if item.env and (env_value := os.environ.get(item.env)):
                self._set_config_value(item.key, env_value, item.env_type)

    def _set_config_value(self, path: str, value: str, value_type: type) -> None:
        converters = {int: int, float: float}
        try:
            converted = converters.get(value_type, str)(value)
        except ValueError as e:
            raise ConfigurationError(f"invalid environment value for {path}") from e
        self.set(path, converted)

    def set(self, key: str, value: Any) -> None:
        keys = key.split(".")
        config = self.data
        for part in keys[:-1]:
            config = config.setdefault(part, {})
        config[keys[-1]] = value

    def get(self, key: str, default: Any = _MISSING) -> Any:
        try:
            return reduce(lambda d, k: d[k], key.split("."), self.data)
        except (KeyError, TypeError):
            if default is not _MISSING:
                return default
            if key in _CONFIG_DEFAULTS:
                return _CONFIG_DEFAULTS[key]
            return None

    def get_required(self, key: str, desc: str | None = None) -> Any:
        value = self.get(key)
        if value is None:
            raise ConfigurationError(f"missing required config: {desc or key}")
        if isinstance(value, str) and not value.strip():
            raise ConfigurationError(f"missing required config: {desc or key}")
        return value

    def get_float(self, key: str, desc: str | None = None) -> float:
        return float(self.get_required(key, desc))

    def get_grid(self, key: str) -> list[float] | None:
        value = self.get(key)
        if value is None:
            return None
        return expand_grid(value, key)

    def resolve_input(self, key: str) -> Path:
        raw = self.get_required(key)
        path = Path(raw)
        if not path.is_absolute() and self.config_path:
            candidate = Path(self.config_path).parent / path
            if candidate.exists():
                path = candidate
        if not path.is_file():
            raise InputNotFoundError(f"input file not found: {raw}")
        return path

    def validate(self) -> None:
        self._validate_types_and_ranges()
        self._validate_grids()

    def _require_type(self, key: str, types: tuple[type, ...], desc: str) -> Any:
        value = self.get(key)
        if value is None:
            return None
        if isinstance(value, bool) or not isinstance(value, types):
            raise ConfigurationError(f"invalid config type: {desc}")
        return value

    @staticmethod
    def _validate_predicate(value: Any, predicate, message: str) -> None:
        if value is not None and not predicate(value):
            raise ConfigurationError(message)

    def _validate_types_and_ranges(self) -> None:
        descs = {}
        for item in _CONFIG_ITEMS:
            self._require_type(item.key, item.types, item.desc)
            descs[item.key] = item.desc
        for key in _POSITIVE_KEYS:
            self._validate_predicate(
                self.get(key),
                lambda v: math.isfinite(v) and v > 0,
                f"{descs[key]} must be > 0",
            )
        for key in _NONNEGATIVE_KEYS:
            self._validate_predicate(
                self.get(key),
                lambda v: math.isfinite(v) and v >= 0,
                f"{descs[key]} must be >= 0",
            )
        self._validate_predicate(
            self.get(ConfigKeys.RUN_THREADS),
            lambda v: v >= 1,
            "worker threads must be >= 1",
        )
        self._validate_predicate(
            self.get(ConfigKeys.LOG_LEVEL),
            lambda v: v.upper()
            in {"TRACE", "DEBUG", "INFO", "SUCCESS", "WARNING", "ERROR", "CRITICAL"},
            "log level is not a loguru level name",
        )

    def _validate_grids(self) -> None:
        for key in (ConfigKeys.GRID_SIGMA_SD, ConfigKeys.GRID_ENERGY, ConfigKeys.GRID_TIME):
            values = self.get_grid(key)
            if key == ConfigKeys.GRID_SIGMA_SD and values and values[0] < 0:
                raise ConfigurationError("sigma_SD grid must be >= 0")
