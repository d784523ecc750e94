"""Unit conventions and validated parameter records.

Energies are in µeV, rates in ns⁻¹ and times in ns. Conversions between
energies and rates go through ħ in µeV·ns.
"""

import math
from dataclasses import dataclass, field, fields, replace
from typing import Any, ClassVar, Self

import numpy as np

from ..shared.constants import FWHM_PER_SIGMA, HBAR_UEV_NS, HC_UEV_NM
from ..shared.exceptions import InputFormatError, ParameterDomainError

__all__ = (
    "CONSTANTS",
    "CavityParams",
    "CouplingParams",
    "EmitterParams",
    "PhysicalConstants",
    "SubsystemParams",
    "cavity_quality_factor",
    "emitter_quality_factor",
    "energy_to_rate",
    "fwhm_from_sigma",
    "photon_energy_uev",
    "rate_to_energy",
    "sigma_from_fwhm",
    "storage_time",
)


def _check(name: str, value: float, *, minimum: float = 0.0, strict: bool = False):
    if isinstance(value, bool) or not isinstance(value, (int, float, np.floating, np.integer)):
        raise ParameterDomainError(f"{name} must be a real number, got {value!r}")
    if not math.isfinite(value):
        raise ParameterDomainError(f"{name} must be finite, got {value!r}")
    if strict and not value > minimum:
        raise ParameterDomainError(f"{name} must be > {minimum}, got {value!r}")
    if not strict and not value >= minimum:
        raise ParameterDomainError(f"{name} must be >= {minimum}, got {value!r}")


def _check_real(name: str, value: float):
    _check(name, value, minimum=-math.inf)


class _JsonRecord:
    """Flat JSON mapping with unit-suffixed names."""

    __slots__ = ()

    _UNITS: ClassVar[dict[str, str]] = {}

    def to_json(self) -> dict[str, Any]:
        out = {}
        for f in fields(self):
            suffix = self._UNITS.get(f.name)
            out[f"{f.name}_{suffix}" if suffix else f.name] = getattr(self, f.name)
        return out

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> Self:
        kwargs = {}
        for f in fields(cls):
            suffix = cls._UNITS.get(f.name)
            key = f"{f.name}_{suffix}" if suffix else f.name
            if key in data:
                kwargs[f.name] = data[key]
        try:
            return cls(**kwargs)
        except TypeError as e:
            raise InputFormatError(f"invalid {cls.__name__} record: {e}") from e


@dataclass(frozen=True, slots=True)
class PhysicalConstants:
    hbar: float = HBAR_UEV_NS

    def __post_init__(self):
        _check("hbar", self.hbar, strict=True)


CONSTANTS = PhysicalConstants()


def energy_to_rate(e):
    return e / CONSTANTS.hbar


def rate_to_energy(r):
    return r * CONSTANTS.hbar


def fwhm_from_sigma(sigma):
    return sigma * FWHM_PER_SIGMA


def sigma_from_fwhm(fwhm):
    return fwhm / FWHM_PER_SIGMA


def photon_energy_uev(wavelength_nm: float) -> float:
    _check("wavelength_nm", wavelength_nm, strict=True)
    return HC_UEV_NM / wavelength_nm


def cavity_quality_factor(wavelength_nm: float, kappa: float) -> float:
    """Q = E/ħκ for a mode at ``wavelength_nm`` with loss rate ``kappa`` (ns⁻¹)."""
    _check("kappa", kappa, strict=True)
    return photon_energy_uev(wavelength_nm) / rate_to_energy(kappa)


def emitter_quality_factor(wavelength_nm: float, linewidth_rate: float) -> float:
    _check("linewidth_rate", linewidth_rate, strict=True)
    return photon_energy_uev(wavelength_nm) / rate_to_energy(linewidth_rate)


@dataclass(frozen=True, slots=True)
class SubsystemParams(_JsonRecord):
    """One line of the doublet coupled to one cavity mode."""

    omega_x: float
    omega_a: float
    gamma: float
    gamma_star: float
    kappa: float
    g: float

    _UNITS: ClassVar[dict[str, str]] = {
        "omega_x": "uev",
        "omega_a": "uev",
        "gamma": "inv_ns",
        "gamma_star": "inv_ns",
        "kappa": "inv_ns",
        "g": "inv_ns",
    }

    def __post_init__(self):
        _check_real("omega_x", self.omega_x)
        _check_real("omega_a", self.omega_a)
        _check("gamma", self.gamma, strict=True)
        _check("kappa", self.kappa, strict=True)
        _check("gamma_star", self.gamma_star)
        _check("g", self.g)

    @property
    def gamma_all(self) -> float:
        return self.gamma + self.gamma_star + self.kappa

    @property
    def detuning_rate(self) -> float:
        return energy_to_rate(self.omega_x - self.omega_a)

    def with_coupling(self, g: float) -> Self:
        return replace(self, g=g)


@dataclass(frozen=True, slots=True)
class EmitterParams(_JsonRecord):
    omega_x_bar: float
    delta: float
    gamma: float
    gamma_star_1: float
    gamma_star_2: float
    sigma_sd: float = 0.0
    a1: float = 1.0
    a2: float = 1.0

    _UNITS: ClassVar[dict[str, str]] = {
        "omega_x_bar": "uev",
        "delta": "uev",
        "gamma": "inv_ns",
        "gamma_star_1": "inv_ns",
        "gamma_star_2": "inv_ns",
        "sigma_sd": "uev",
    }

    def __post_init__(self):
        _check_real("omega_x_bar", self.omega_x_bar)
        _check("delta", self.delta)
        _check("gamma", self.gamma, strict=True)
        _check("gamma_star_1", self.gamma_star_1)
        _check("gamma_star_2", self.gamma_star_2)
        _check("sigma_sd", self.sigma_sd)
        _check("a1", self.a1)
        _check("a2", self.a2)
        if not self.a1 + self.a2 > 0:
            raise ParameterDomainError("a1 + a2 must be > 0")

    def gamma_star(self, line: int) -> float:
        if line == 1:
            return self.gamma_star_1
        if line == 2:
            return self.gamma_star_2
        raise ParameterDomainError(f"line must be 1 or 2, got {line!r}")

    def linewidth(self, line: int) -> float:
        """Instantaneous linewidth Γᵢ = γ + γ*ᵢ in ns⁻¹."""
        return self.gamma + self.gamma_star(line)

    def amplitude(self, line: int) -> float:
        self.gamma_star(line)
        return self.a1 if line == 1 else self.a2

    def line_offset(self, line: int) -> float:
        """Energy offset of line ``line`` from the doublet centre (µeV)."""
        self.gamma_star(line)
        return -self.delta / 2 if line == 1 else self.delta / 2

    def subsystem(
        self,
        line: int,
        g: float,
        kappa: float,
        omega_x: float | None = None,
        omega_a: float | None = None,
    ) -> SubsystemParams:
        centre = self.omega_x_bar if omega_x is None else omega_x
        return SubsystemParams(
            omega_x=centre + self.line_offset(line),
            omega_a=self.omega_x_bar if omega_a is None else omega_a,
            gamma=self.gamma,
            gamma_star=self.gamma_star(line),
            kappa=kappa,
            g=g,
        )


@dataclass(frozen=True, slots=True)
class CavityParams(_JsonRecord):
    omega_a_bar: float
    kappa: float
    sigma_vib: float = 0.0
    mode_order: int = 1
    storage_rate: float | None = field(default=None)

    _UNITS: ClassVar[dict[str, str]] = {
        "omega_a_bar": "uev",
        "kappa": "inv_ns",
        "sigma_vib": "uev",
        "storage_rate": "inv_ns",
    }

    def __post_init__(self):
        _check_real("omega_a_bar", self.omega_a_bar)
        _check("kappa", self.kappa, strict=True)
        _check("sigma_vib", self.sigma_vib)
        if isinstance(self.mode_order, bool) or not isinstance(self.mode_order, int):
            raise ParameterDomainError("mode_order must be an integer")
        if self.mode_order < 1:
            raise ParameterDomainError("mode_order must be >= 1")
        if self.storage_rate is None:
            object.__setattr__(self, "storage_rate", float(self.kappa))
        _check("storage_rate", self.storage_rate, strict=True)


@dataclass(frozen=True, slots=True)
class CouplingParams(_JsonRecord):
    g: float

    _UNITS: ClassVar[dict[str, str]] = {"g": "inv_ns"}

    def __post_init__(self):
        _check("g", self.g)

    @classmethod
    def from_energy(cls, g_uev: float) -> Self:
        return cls(g=energy_to_rate(g_uev))

    @property
    def g_uev(self) -> float:
        return rate_to_energy(self.g)


def storage_time(c: CavityParams) -> float:
    """Photon storage time in ps."""
    return 1000.0 / c.storage_rate
