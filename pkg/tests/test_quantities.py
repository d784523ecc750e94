import math

import pytest

from cqedfit.model.quantities import (
    CavityParams,
    CouplingParams,
    EmitterParams,
    SubsystemParams,
    cavity_quality_factor,
    energy_to_rate,
    photon_energy_uev,
    rate_to_energy,
    storage_time,
)
from cqedfit.shared.constants import HBAR_UEV_NS
from cqedfit.shared.exceptions import InputFormatError, ParameterDomainError


def _emitter(**overrides) -> EmitterParams:
    values = {
        "omega_x_bar": 1000.0,
        "delta": 700.0,
        "gamma": 8.0,
        "gamma_star_1": 300.0,
        "gamma_star_2": 280.0,
        "sigma_sd": 70.0,
    }
    values.update(overrides)
    return EmitterParams(**values)


@pytest.mark.parametrize(
    ("energy", "rate"),
    [(0.0, 0.0), (110.0, 167.12), (HBAR_UEV_NS, 1.0)],
)
def test_energy_to_rate(energy, rate):
    assert energy_to_rate(energy) == pytest.approx(rate, abs=5e-3)


def test_rate_to_energy_of_free_space_lifetime():
    assert rate_to_energy(1 / 0.121) == pytest.approx(5.44, abs=5e-3)


@pytest.mark.parametrize("energy", [1e-9, 0.3, 110.0, 7.5e4, 1.23e8])
def test_energy_rate_round_trip(energy):
    assert rate_to_energy(energy_to_rate(energy)) == pytest.approx(energy, rel=1e-15)


@pytest.mark.parametrize(
    ("storage_rate", "expected_ps"),
    [(energy_to_rate(110.0), 5.98), (100.0, 10.0), (125.0, 8.0)],
)
def test_storage_time(storage_rate, expected_ps):
    cavity = CavityParams(omega_a_bar=0.0, kappa=150.0, storage_rate=storage_rate)
    assert storage_time(cavity) == pytest.approx(expected_ps, abs=5e-3)


def test_storage_rate_defaults_to_kappa():
    assert CavityParams(omega_a_bar=0.0, kappa=150.0).storage_rate == 150.0


@pytest.mark.parametrize(
    "kwargs",
    [
        {"gamma": math.nan},
        {"gamma": 0.0},
        {"kappa": -1.0},
        {"g": -0.1},
        {"gamma_star": math.inf},
        {"omega_x": True},
    ],
)
def test_subsystem_rejects_invalid_values(kwargs):
    values = {"omega_x": 0.0, "omega_a": 0.0, "gamma": 1.0, "gamma_star": 1.0, "kappa": 1.0, "g": 1.0}
    values.update(kwargs)
    with pytest.raises(ParameterDomainError):
        SubsystemParams(**values)


def test_emitter_rejects_zero_total_amplitude():
    with pytest.raises(ParameterDomainError):
        _emitter(a1=0.0, a2=0.0)


def test_cavity_rejects_bad_mode_order():
    with pytest.raises(ParameterDomainError):
        CavityParams(omega_a_bar=0.0, kappa=1.0, mode_order=0)


def test_emitter_lines_sit_either_side_of_the_centre():
    e = _emitter()
    p1 = e.subsystem(1, g=10.0, kappa=150.0)
    p2 = e.subsystem(2, g=10.0, kappa=150.0)
    assert p1.omega_x == pytest.approx(650.0)
    assert p2.omega_x == pytest.approx(1350.0)
    assert p1.omega_a == p2.omega_a == 1000.0
    assert p1.gamma_star == 300.0
    assert e.linewidth(2) == pytest.approx(288.0)
    with pytest.raises(ParameterDomainError):
        e.linewidth(3)


def test_json_records_carry_unit_suffixes():
    e = _emitter()
    data = e.to_json()
    assert data["delta_uev"] == 700.0
    assert data["gamma_inv_ns"] == 8.0
    assert EmitterParams.from_json(data) == e


def test_from_json_rejects_incomplete_records():
    with pytest.raises(InputFormatError):
        SubsystemParams.from_json({"omega_x_uev": 0.0})


def test_coupling_from_energy():
    c = CouplingParams.from_energy(40.0)
    assert c.g == pytest.approx(energy_to_rate(40.0))
    assert c.g_uev == pytest.approx(40.0)


def test_cavity_quality_factor_is_energy_over_linewidth():
    q = cavity_quality_factor(900.0, energy_to_rate(110.0))
    assert q == pytest.approx(photon_energy_uev(900.0) / 110.0)
    assert 12_000 < q < 13_000
