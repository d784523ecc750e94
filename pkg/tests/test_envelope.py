import math

import numpy as np
import pytest

from cqedfit.model.envelope import (
    dimensionless_parameters,
    dip_value,
    dip_vibration_correction,
    envelope_approx,
    envelope_discrepancy,
    envelope_full,
    envelope_marginal_approx_widths,
    marginal_exact,
    marginal_numeric,
    normalized_dip_approx,
)
from cqedfit.model.lineshape import GridSpec, SampledCurve, lorentzian_eval
from cqedfit.model.quantities import (
    CavityParams,
    EmitterParams,
    SubsystemParams,
    energy_to_rate,
    rate_to_energy,
)
from cqedfit.shared.exceptions import (
    DegenerateDecompositionError,
    NoDoubletError,
    ParameterDomainError,
    PreconditionError,
)


def _doublet(**overrides) -> EmitterParams:
    values = {
        "omega_x_bar": 0.0,
        "delta": 700.0,
        "gamma": energy_to_rate(5.0),
        "gamma_star_1": energy_to_rate(245.0),
        "gamma_star_2": energy_to_rate(245.0),
        "sigma_sd": 70.0,
    }
    values.update(overrides)
    return EmitterParams(**values)


@pytest.mark.parametrize(
    ("g_uev", "gamma_star_uev"),
    [(40.0, 245.0), (200.0, 20.0)],
    ids=["weak", "strong"],
)
def test_marginal_exact_matches_quadrature(g_uev, gamma_star_uev):
    p = SubsystemParams(
        omega_x=0.0,
        omega_a=0.0,
        gamma=energy_to_rate(5.0),
        gamma_star=energy_to_rate(gamma_star_uev),
        kappa=energy_to_rate(110.0),
        g=energy_to_rate(g_uev),
    )
    grid = GridSpec.centered(0.0, 1500.0, 25.0)
    exact = marginal_exact(p).evaluate(grid.axis)
    numeric = marginal_numeric(p, grid).values
    assert np.all(exact >= 0)
    np.testing.assert_allclose(numeric, exact, rtol=1e-5, atol=1e-7 * exact.max())


@pytest.mark.parametrize("field", ["gamma_star", "g"])
def test_marginal_exact_degenerate_inputs(field):
    values = {"omega_x": 0.0, "omega_a": 0.0, "gamma": 1.0, "gamma_star": 50.0, "kappa": 100.0, "g": 10.0}
    values[field] = 0.0
    with pytest.raises(DegenerateDecompositionError):
        marginal_exact(SubsystemParams(**values))


def test_marginal_window_integral_approaches_total():
    p = SubsystemParams(0.0, 0.0, 1.0, 50.0, 100.0, 10.0)
    decomposition = marginal_exact(p)
    assert decomposition.window_integral(-1e9, 1e9) == pytest.approx(decomposition.total(), rel=1e-6)
    assert 0 < decomposition.window_integral(-10.0, 10.0) < decomposition.total()


def test_envelope_is_symmetric_for_symmetric_doublet():
    e = _doublet()
    c = CavityParams(omega_a_bar=0.0, kappa=energy_to_rate(110.0), sigma_vib=300.0)
    grid = GridSpec.centered(0.0, 1500.0, 10.0)
    values = envelope_full(e, c, energy_to_rate(40.0), grid).values
    np.testing.assert_allclose(values, values[::-1], rtol=1e-9)


def test_per_unit_envelope_is_full_over_g_squared():
    e = _doublet(a2=0.6)
    c = CavityParams(omega_a_bar=100.0, kappa=energy_to_rate(110.0), sigma_vib=150.0)
    grid = GridSpec.centered(0.0, 1500.0, 20.0)
    g = energy_to_rate(40.0)
    full = envelope_full(e, c, g, grid).values
    per_unit = envelope_full(e, c, g, grid, per_unit_coupling=True).values
    np.testing.assert_allclose(per_unit * g * g, full, rtol=1e-12)


def test_per_unit_envelope_is_finite_without_coupling():
    e = _doublet()
    c = CavityParams(omega_a_bar=0.0, kappa=energy_to_rate(110.0))
    grid = GridSpec.centered(0.0, 1000.0, 20.0)
    assert envelope_full(e, c, 0.0, grid).values.max() == 0
    assert envelope_full(e, c, 0.0, grid, per_unit_coupling=True).values.max() > 0


def test_envelope_rejects_negative_coupling():
    grid = GridSpec.centered(0.0, 100.0, 10.0)
    with pytest.raises(ParameterDomainError):
        envelope_full(_doublet(), CavityParams(0.0, 100.0), -1.0, grid)


def test_broad_modulation_reduces_to_marginal():
    e = EmitterParams(0.0, 0.0, 1.0, 50.0, 50.0, a1=1.0, a2=0.0)
    gamma_all = rate_to_energy(1.0 + 50.0 + 100.0)
    c = CavityParams(omega_a_bar=0.0, kappa=100.0, sigma_vib=100 * gamma_all)
    grid = GridSpec.centered(0.0, 20 * gamma_all, gamma_all / 20)
    report = envelope_discrepancy(e, c, 20.0, grid)
    assert report["max_relative_to_peak"] < 0.03
    assert report["sigma_vib_over_kappa"] > 100


def test_envelope_approx_includes_cavity_broadened_copy():
    e = _doublet()
    c = CavityParams(0.0, energy_to_rate(110.0))
    grid = GridSpec.centered(0.0, 10000.0, 5.0)
    bare = envelope_approx(e, c, 0.0, grid)
    coupled = envelope_approx(e, c, energy_to_rate(40.0), grid)
    ratio = e.gamma_star_1 / (e.gamma_star_1 + c.kappa) * energy_to_rate(40.0) ** 2 / (c.kappa * e.gamma)
    assert coupled.integral() / bare.integral() == pytest.approx(1 + ratio, rel=2e-2)


def _two_lorentzians(step: float) -> SampledCurve:
    grid = GridSpec.centered(0.0, 1500.0, step)
    values = lorentzian_eval(grid.axis, 300.0, -350.0) + lorentzian_eval(grid.axis, 300.0, 350.0)
    return SampledCurve.on(grid, values)


def test_dip_value_matches_dense_evaluation():
    fine = _two_lorentzians(0.01)
    axis, values = fine.axis, fine.values
    peak = values[axis > 0].max()
    minimum = values[np.argmin(np.abs(axis))]
    report = dip_value(_two_lorentzians(1.0), 700.0)
    assert report.dip == pytest.approx(minimum / peak, rel=1e-4)
    assert report.dip_corrected == report.dip
    assert report.extremum_positions[1] == pytest.approx(0.0, abs=1e-6)
    assert report.extremum_positions[0] == pytest.approx(-report.extremum_positions[2], abs=1e-6)


def test_dip_value_is_scale_invariant():
    curve = _two_lorentzians(2.0)
    assert dip_value(curve.scaled(7.5), 700.0).dip == pytest.approx(dip_value(curve, 700.0).dip, rel=1e-12)


def test_dip_value_needs_two_maxima():
    grid = GridSpec.centered(0.0, 1500.0, 5.0)
    with pytest.raises(NoDoubletError):
        dip_value(SampledCurve.on(grid, lorentzian_eval(grid.axis, 300.0)), 700.0)


def test_dip_value_applies_vibration_correction():
    report = dip_value(_two_lorentzians(1.0), 700.0, sigma_vib=300.0)
    assert report.dip_corrected == pytest.approx(report.dip * math.exp(-(350.0**2) / (2 * 300.0**2)))


def test_vibration_correction_needs_positive_width():
    assert dip_vibration_correction(0.5, 700.0, 300.0) == pytest.approx(0.5 * math.exp(-350.0**2 / 180000.0))
    with pytest.raises(ParameterDomainError):
        dip_vibration_correction(0.5, 700.0, 0.0)


def test_normalized_dip_approximation():
    e = _doublet()
    c = CavityParams(0.0, energy_to_rate(110.0))
    assert normalized_dip_approx(e, c, 0.0) == 0.0
    assert normalized_dip_approx(e, c, energy_to_rate(40.0)) > 0
    with pytest.raises(PreconditionError):
        normalized_dip_approx(_doublet(a2=0.5), c, energy_to_rate(40.0))


def _broad_cavity() -> CavityParams:
    return CavityParams(0.0, energy_to_rate(110.0), sigma_vib=3000.0)


def test_normalized_dip_scales_with_coupling_squared():
    e = _doublet()
    c = CavityParams(0.0, energy_to_rate(110.0))
    g_max = math.sqrt(0.01 * c.kappa * e.gamma)
    couplings = np.linspace(0.1, 1.0, 6) * g_max
    per_g2 = [normalized_dip_approx(e, c, g) / g**2 for g in couplings]
    assert max(per_g2) / min(per_g2) - 1 < 0.02


@pytest.mark.slow
@pytest.mark.parametrize("g_uev", [5.0, 10.0])
def test_normalized_dip_matches_full_envelope(g_uev):
    e = _doublet()
    c = _broad_cavity()
    grid = GridSpec.centered(0.0, 1500.0, 5.0)
    free_space = dip_value(envelope_approx(e, c, 0.0, grid), 700.0).dip
    coupled = dip_value(envelope_full(e, c, energy_to_rate(g_uev), grid), 700.0).dip
    expected = normalized_dip_approx(e, c, energy_to_rate(g_uev))
    assert (coupled - free_space) / free_space == pytest.approx(expected, rel=0.15)


@pytest.mark.slow
@pytest.mark.parametrize("g_uev", [5.0, 10.0])
def test_envelope_approx_matches_full_at_dip_extrema(g_uev):
    e = _doublet()
    c = _broad_cavity()
    grid = GridSpec.centered(0.0, 1500.0, 5.0)
    g = energy_to_rate(g_uev)
    full = envelope_full(e, c, g, grid)
    approx = envelope_approx(e, c, g, grid)
    scale = full.integral() / approx.integral()
    positions = dip_value(full, 700.0).extremum_positions
    np.testing.assert_allclose(
        scale * np.interp(positions, grid.axis, approx.values),
        np.interp(positions, grid.axis, full.values),
        rtol=0.1,
    )


@pytest.mark.slow
def test_corrected_dip_grows_with_coupling():
    e = _doublet()
    c = _broad_cavity()
    grid = GridSpec.centered(0.0, 1500.0, 5.0)
    dips = [
        dip_value(
            envelope_full(e, c, energy_to_rate(g_uev), grid, per_unit_coupling=True),
            700.0,
            sigma_vib=c.sigma_vib,
        ).dip_corrected
        for g_uev in (0.0, 5.0, 10.0, 20.0, 40.0, 80.0)
    ]
    assert np.all(np.diff(dips) >= -1e-9)
    assert dips[-1] > dips[0]


def test_small_coupling_widths():
    p = SubsystemParams(0.0, 0.0, gamma=0.01, gamma_star=50.0, kappa=100.0, g=0.02)
    widths = envelope_marginal_approx_widths(p)
    assert widths["coupling_parameter"] < 0.01
    assert widths["ell_minus"] == pytest.approx(50.01)
    assert widths["ell_plus_small_g"] == pytest.approx(widths["ell_plus"], rel=1e-3)
    assert widths["area_ratio_small_g"] == pytest.approx(widths["area_ratio"], rel=2e-3)


def test_dimensionless_parameters_per_line():
    e = _doublet(gamma_star_2=energy_to_rate(200.0))
    c = CavityParams(0.0, energy_to_rate(110.0))
    groups = dimensionless_parameters(e, c, energy_to_rate(40.0))
    assert set(groups) == {"line1", "line2"}
    assert groups["line1"]["decay"] < groups["line2"]["decay"]
    assert 0 < groups["line1"]["emitter_fraction"] < 1
