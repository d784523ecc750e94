import mpmath
import numpy as np
import pytest
from conftest import line_integral, reference_rates

from cqedfit.model.lineshape import GridSpec
from cqedfit.model.quantities import SubsystemParams, energy_to_rate, rate_to_energy
from cqedfit.model.spectrum import (
    coupling_function_f,
    coupling_shift,
    effective_energies,
    efficiency_per_g2,
    single_photon_efficiency,
    spectrum_curve,
    spectrum_density,
)


def _subsystem(detuning_uev: float = 0.0, **overrides) -> SubsystemParams:
    values = {"omega_x": detuning_uev, "omega_a": 0.0, **reference_rates()}
    values.update(overrides)
    return SubsystemParams(**values)


@pytest.mark.parametrize("z", [1.8j, 0.3 + 0.1j, -2.0 + 5.0j, 1e-9 + 0j])
def test_coupling_function_matches_direct_form(z):
    with mpmath.workdps(40):
        zz = mpmath.mpc(z)
        reference = complex((mpmath.sqrt(1 + zz * zz) - 1) / zz)
    assert coupling_function_f(z) == pytest.approx(reference, rel=1e-12)


def test_coupling_function_vanishes_at_zero():
    assert coupling_function_f(0) == 0


def test_coupling_shift_limits():
    assert complex(coupling_shift(0.0, 3.0)) == pytest.approx(3.0)
    assert complex(coupling_shift(70j, 0.0)) == 0


def test_effective_energies_obey_vieta():
    energies = effective_energies(_subsystem())
    total = energies.omega_x_tilde + energies.omega_a_tilde
    product = energies.omega_x_tilde * energies.omega_a_tilde
    assert total == pytest.approx(180j, rel=1e-12)
    assert product == pytest.approx(-8475.0, rel=1e-12)
    assert energies.delta_tilde == pytest.approx(70j, rel=1e-12)


@pytest.mark.parametrize("detuning", [0.0, 200.0, -650.0])
def test_spectrum_integrates_to_efficiency(detuning):
    p = _subsystem(detuning)
    beta = single_photon_efficiency(p)
    width = 50 * rate_to_energy(p.gamma_all + 2 * p.g)
    total = line_integral(lambda w: spectrum_density(p, w), (0.0, detuning), width)
    assert total == pytest.approx(beta, rel=1e-6)


def test_spectrum_is_symmetric_on_resonance():
    p = _subsystem()
    omega = np.linspace(0.0, 800.0, 17)
    np.testing.assert_allclose(spectrum_density(p, omega), spectrum_density(p, -omega), rtol=1e-12)


def test_efficiency_grows_with_coupling_and_saturates():
    rates = reference_rates()
    couplings = energy_to_rate(np.array([0.0, 1.0, 10.0, 40.0, 200.0, 1e4]))
    betas = [single_photon_efficiency(_subsystem(g=float(g))) for g in couplings]
    assert betas[0] == 0
    assert np.all(np.diff(betas) > 0)
    limit = rates["kappa"] / (rates["gamma"] + rates["kappa"])
    assert max(betas) < limit
    assert betas[-1] == pytest.approx(limit, rel=1e-3)


def test_efficiency_per_g2_is_finite_without_coupling():
    rates = reference_rates()
    value = efficiency_per_g2(0.0, rates["gamma"], rates["gamma_star"], rates["kappa"], 0.0)
    gamma_all = rates["gamma"] + rates["gamma_star"] + rates["kappa"]
    assert value == pytest.approx(4 / (rates["gamma"] * gamma_all))


def test_zero_coupling_spectrum_is_zero():
    p = _subsystem(g=0.0)
    assert np.all(spectrum_density(p, np.linspace(-500, 500, 11)) == 0)


def test_spectrum_curve_grid_integral():
    p = _subsystem(150.0)
    grid = GridSpec.centered(0.0, 50 * rate_to_energy(p.gamma_all), 1.0)
    curve = spectrum_curve(p, grid)
    assert curve.integral() == pytest.approx(single_photon_efficiency(p), rel=2e-3)
