import math

import numpy as np
import pytest

from cqedfit.fitting.lifetime import fit_freespace_decay
from cqedfit.model.dynamics import (
    DecayModelParams,
    IrfKernel,
    acceleration_zeta,
    coupling_rate_R,
    decay_components,
    decay_detuning_averaged,
    decay_instantaneous,
    decay_model_cavity,
    decay_model_freespace,
    double_exponential_ratio,
    effective_decay_rate,
    effective_rate_large_modulation,
    effective_single_exponential,
    efficiency_beta_delta,
    gaussian_irf,
    storage_kernel,
)
from cqedfit.model.lineshape import GridSpec, gaussian_eval
from cqedfit.model.quantities import CavityParams, EmitterParams, energy_to_rate, rate_to_energy
from cqedfit.oracle.exponentials import oracle_best_single_exponential
from cqedfit.shared.exceptions import ParameterDomainError, PreconditionError


def _params(g: float = 40.0, sigma_sd: float = 70.0, sigma_vib: float = 0.0, **cavity) -> DecayModelParams:
    emitter = EmitterParams(
        omega_x_bar=0.0,
        delta=700.0,
        gamma=energy_to_rate(5.0),
        gamma_star_1=energy_to_rate(245.0),
        gamma_star_2=energy_to_rate(200.0),
        sigma_sd=sigma_sd,
        a2=0.8,
    )
    cav = CavityParams(omega_a_bar=0.0, kappa=energy_to_rate(110.0), sigma_vib=sigma_vib, **cavity)
    return DecayModelParams(emitter, cav, g=energy_to_rate(g))


def test_coupling_rate_peaks_on_resonance():
    params = _params()
    e, c = params.emitter, params.cavity
    gamma_all = c.kappa + e.gamma + e.gamma_star_1
    peak = coupling_rate_R(1, 350.0, params)
    assert peak == pytest.approx(4 * params.g**2 / gamma_all)
    half = 350.0 + rate_to_energy(gamma_all / 2)
    assert coupling_rate_R(1, half, params) == pytest.approx(peak / 2)
    assert coupling_rate_R(2, -350.0, params) > coupling_rate_R(2, 350.0, params)


def test_zero_coupling_gives_no_rate():
    params = _params(g=0.0)
    assert coupling_rate_R(1, 350.0, params) == 0
    assert efficiency_beta_delta(1, 350.0, params) == 0


def test_efficiency_saturates_at_cavity_fraction():
    params = _params(g=1e5)
    e, c = params.emitter, params.cavity
    limit = c.kappa / (e.gamma + c.kappa)
    assert efficiency_beta_delta(1, 350.0, params) == pytest.approx(limit, rel=1e-6)
    assert efficiency_beta_delta(1, 350.0, params) < limit


def _time_grid(gamma: float) -> GridSpec:
    return GridSpec.spanning(-0.1, 40.0 / gamma, 0.004)


def test_instantaneous_decay_starts_at_amplitude_sum():
    params = _params()
    e = params.emitter
    grid = GridSpec.spanning(0.0, 2.0, 0.004)
    curve = decay_instantaneous(100.0, params, grid)
    expected = sum(
        e.amplitude(line)
        * efficiency_beta_delta(line, 100.0, params)
        * (e.gamma + coupling_rate_R(line, 100.0, params))
        for line in (1, 2)
    )
    assert curve.values[0] == pytest.approx(expected, rel=1e-12)
    after = curve.values[1:]
    assert np.all(np.diff(after) < 0)


def test_binned_decay_keeps_total_yield():
    params = _params()
    e = params.emitter
    grid = _time_grid(e.gamma)
    curve = decay_instantaneous(100.0, params, grid, binned=True)
    expected = sum(e.amplitude(line) * efficiency_beta_delta(line, 100.0, params) for line in (1, 2))
    assert curve.riemann_sum() == pytest.approx(expected, rel=1e-9)


def test_averaged_equals_instantaneous_without_spread():
    params = _params(sigma_sd=0.0)
    grid = GridSpec.spanning(-0.1, 1.0, 0.004)
    averaged = decay_detuning_averaged(params, grid)
    direct = decay_instantaneous(0.0, params, grid)
    np.testing.assert_allclose(averaged.values, direct.values, rtol=1e-13)


def test_averaged_decay_is_monotone_after_onset():
    params = _params(sigma_vib=100.0)
    grid = GridSpec.spanning(-0.1, 2.0, 0.004)
    curve = decay_detuning_averaged(params, grid, binned=True)
    after = curve.values[curve.axis > 0.004]
    assert np.all(np.diff(after) < 0)
    assert np.all(curve.values[curve.axis < -0.002] == 0)


def test_per_unit_components_scale_out_coupling():
    params = _params()
    a, r = decay_components(params)
    a_unit, r_unit = decay_components(params, per_unit_coupling=True)
    np.testing.assert_allclose(a_unit * params.g**2, a, rtol=1e-12)
    np.testing.assert_array_equal(r_unit, r)


def test_storage_kernel_value_and_area():
    c = CavityParams(0.0, 150.0)
    grid = GridSpec.spanning(-0.05, 1.0, 0.001)
    point = storage_kernel(c, grid, t0=0.0)
    assert point.values[np.argmin(np.abs(point.axis))] == pytest.approx(1.0)
    binned = storage_kernel(c, grid, t0=0.0, binned=True)
    assert binned.riemann_sum() == pytest.approx(1 / 150.0, rel=1e-9)


def test_impulse_response_reproduces_exponential():
    grid = GridSpec.spanning(0.0, 2.0, 0.004)
    curve = decay_model_freespace(
        100.0, 0.121, 0.2, 5.0, IrfKernel.impulse(grid.step), grid, binned=False
    )
    t = grid.axis
    expected = 5.0 + np.where(t >= 0.2 - 1e-12, 100.0 * np.exp(-(t - 0.2) / 0.121), 0.0)
    np.testing.assert_allclose(curve.values, expected, rtol=1e-10)


def test_freespace_model_rejects_bad_lifetime():
    grid = GridSpec.spanning(0.0, 1.0, 0.004)
    with pytest.raises(ParameterDomainError):
        decay_model_freespace(1.0, 0.0, 0.0, 0.0, IrfKernel.impulse(grid.step), grid)


def test_fast_storage_reduces_to_bare_decay():
    params = _params(storage_rate=1e5)
    grid = GridSpec.spanning(-0.1, 1.5, 0.004)
    cavity = decay_model_cavity(params, IrfKernel.impulse(grid.step), grid)
    bare = decay_detuning_averaged(params, grid, binned=True)
    np.testing.assert_allclose(1e5 * cavity.values, bare.values, rtol=1e-3, atol=1e-9 * bare.values.max())


def test_gaussian_irf_is_normalised():
    irf = gaussian_irf(0.040, 0.004)
    assert irf.curve.riemann_sum() == pytest.approx(1.0)
    assert irf.curve.axis[np.argmax(irf.curve.values)] == pytest.approx(0.0, abs=1e-12)


def test_irf_from_histogram_removes_background():
    times = np.arange(0.0, 3.0, 0.004)
    counts = 10.0 + 1000.0 * gaussian_eval(times, 0.017, 1.0)
    irf = IrfKernel.from_histogram(times, counts)
    assert irf.curve.riemann_sum() == pytest.approx(1.0)
    assert np.all(irf.curve.values >= 0)
    assert irf.curve.values[0] == pytest.approx(0.0, abs=1e-9)


def test_irf_kernel_requires_normalisation():
    from cqedfit.model.lineshape import SampledCurve

    with pytest.raises(PreconditionError):
        IrfKernel(SampledCurve(0.0, 0.004, [1.0, 2.0]))


def test_double_exponential_ratio():
    assert double_exponential_ratio(1.0, 0.1, 0.0, 1.0) == 1.0
    assert double_exponential_ratio(1.0, 0.1, 1.0, 0.3) == pytest.approx(0.25)
    with pytest.raises(ParameterDomainError):
        double_exponential_ratio(0.0, 0.1, 0.0, 0.3)


def test_effective_exponential_of_single_component():
    assert effective_single_exponential([3.0], [7.0]) == (3.0, 7.0)


def test_effective_exponential_of_close_pair():
    _, rate = effective_single_exponential([1.0, 1.0], [10.0, 11.0])
    assert rate == pytest.approx(10.5, rel=5e-3)


@pytest.mark.parametrize(("amplitudes", "rates"), [([1.0, 0.5], [1.0, 5.0]), ([0.2, 1.0, 0.4], [2.0, 3.0, 9.0])])
def test_effective_exponential_matches_brute_force(amplitudes, rates):
    c_eff, gamma_eff = effective_single_exponential(amplitudes, rates)
    c_ref, gamma_ref = oracle_best_single_exponential(amplitudes, rates)
    assert gamma_eff == pytest.approx(gamma_ref, rel=1e-2)
    assert c_eff == pytest.approx(c_ref, rel=1e-2)


def test_effective_exponential_weighted_mean():
    assert effective_single_exponential([1.0, 3.0], [2.0, 6.0], method="weighted_mean") == (4.0, 5.0)
    with pytest.raises(ParameterDomainError):
        effective_single_exponential([1.0], [2.0], method="median")
    with pytest.raises(ParameterDomainError):
        effective_single_exponential([1.0], [0.0])


def test_large_modulation_rate_in_energy_units():
    e = EmitterParams(0.0, 0.0, energy_to_rate(5.0), energy_to_rate(245.0), energy_to_rate(245.0))
    p = e.subsystem(1, energy_to_rate(40.0), energy_to_rate(110.0))
    assert rate_to_energy(effective_rate_large_modulation(p)) == pytest.approx(9.01, abs=0.01)


def _large_modulation_params() -> DecayModelParams:
    kappa, gamma, gamma_star = 200.0, 2.0, 200.0
    emitter = EmitterParams(0.0, 0.0, gamma, gamma_star, gamma_star, a1=1.0, a2=0.0)
    cavity = CavityParams(0.0, kappa, sigma_vib=50 * rate_to_energy(kappa + gamma_star))
    return DecayModelParams(emitter, cavity, g=math.sqrt(40.2))


def test_large_modulation_limit_of_averaged_rate():
    params = _large_modulation_params()
    e = params.emitter
    r_eff = effective_rate_large_modulation(e.subsystem(1, params.g, params.cavity.kappa))
    amplitudes, rates = decay_components(params)
    _, mean_rate = effective_single_exponential(amplitudes, rates, method="weighted_mean")
    assert mean_rate - e.gamma == pytest.approx(r_eff, rel=2e-2)
    assert effective_decay_rate(params) == pytest.approx(e.gamma + r_eff, rel=2e-2)


def test_acceleration_zeta():
    assert acceleration_zeta(2.2, 2.0, 1.0, 0.3, 0.1) == pytest.approx(0.08)
    assert acceleration_zeta(10.0, 2.0, 2.0, 0.5, 0.5) == pytest.approx(2.0)
    with pytest.raises(ParameterDomainError):
        acceleration_zeta(10.0, 2.0, 0.0, 0.5, 0.5)


def test_noiseless_lifetime_recovered_through_irf():
    irf = gaussian_irf(0.040, 0.004)
    grid = GridSpec.spanning(0.0, 3.0, 0.004)
    data = decay_model_freespace(1000.0, 0.121, 0.2, 5.0, irf, grid)
    result = fit_freespace_decay(data, irf)
    assert result.converged
    assert result.extra["lifetime_ps"] == pytest.approx(121.0, rel=1e-2)
    assert result["t0_ns"] == pytest.approx(0.2, abs=4e-3)
    assert result["background"] == pytest.approx(5.0, rel=1e-2)
