import math

import numpy as np
import pytest

from cqedfit.fitting.coupling import (
    CouplingSetup,
    GCurve,
    coupling_from_acceleration,
    g_squared_regression,
)
from cqedfit.fitting.crossing import find_crossing
from cqedfit.fitting.engine import FitResult
from cqedfit.fitting.spectra import LinewidthTable
from cqedfit.model.quantities import energy_to_rate
from cqedfit.shared.exceptions import NoCrossingError, ParameterDomainError, PreconditionError

AXIS = (210.0, 230.0, 260.0, 280.0, 300.0)


def _curve(source, values, axis=AXIS) -> GCurve:
    return GCurve(tuple(axis), tuple(float(v) for v in values), source)


def _linear(source, slope, axis=AXIS) -> GCurve:
    return _curve(source, [40.0 + slope * (x - 250.0) for x in axis], axis)


def _table(gamma1=(300.0, 250.0), gamma2=(280.0, 240.0)) -> LinewidthTable:
    return LinewidthTable((40.0, 100.0), gamma1, gamma2, (2.0, 1.0), (True, True))


def test_crossing_of_opposite_trends():
    result = find_crossing(_linear("envelope", 0.2), _linear("decay", -0.3))
    assert result.gamma_star_total == pytest.approx(250.0, abs=1e-6)
    assert result.g_cross == pytest.approx(40.0, abs=1e-6)
    assert len(result.all_crossings) == 1
    assert not result.degenerate
    assert result.to_json()["g_cross_uev"] == pytest.approx(40.0, abs=1e-6)


def test_crossing_on_a_grid_point():
    result = find_crossing(
        _linear("envelope", 0.2, (200.0, 250.0, 300.0)), _linear("decay", -0.3, (200.0, 250.0, 300.0))
    )
    assert result.gamma_star_total == 250.0
    assert result.g_cross == pytest.approx(40.0)


def test_coinciding_curves_are_degenerate():
    result = find_crossing(_linear("envelope", 0.2), _linear("decay", 0.2))
    assert result.degenerate
    assert len(result.all_crossings) == len(AXIS)


def test_parallel_curves_do_not_cross():
    with pytest.raises(NoCrossingError) as excinfo:
        find_crossing(_curve("envelope", [45.0] * 5), _curve("decay", [40.0] * 5))
    assert excinfo.value.min_gap == pytest.approx(5.0)
    assert excinfo.value.code == "no_crossing"


def test_disjoint_curves_are_rejected():
    env = _linear("envelope", 0.2, (100.0, 150.0, 200.0))
    dec = _linear("decay", -0.3, (300.0, 350.0, 400.0))
    with pytest.raises(PreconditionError):
        find_crossing(env, dec)


def test_smallest_linewidth_crossing_is_primary():
    axis = (100.0, 200.0, 300.0, 400.0)
    result = find_crossing(_curve("envelope", [40.0] * 4, axis), _curve("decay", [30.0, 50.0, 30.0, 50.0], axis))
    assert [x for x, _ in result.all_crossings] == pytest.approx([150.0, 250.0, 350.0])
    assert result.gamma_star_total == pytest.approx(150.0)


def test_crossing_of_partially_overlapping_curves():
    env = _linear("envelope", 0.2, (200.0, 240.0, 280.0))
    dec = _linear("decay", -0.3, (230.0, 270.0, 320.0))
    result = find_crossing(env, dec)
    assert result.gamma_star_total == pytest.approx(250.0, abs=1e-6)


@pytest.mark.parametrize(
    ("axis", "values", "source"),
    [
        ((200.0, 250.0), (40.0,), "envelope"),
        ((200.0, 250.0), (40.0, -1.0), "envelope"),
        ((250.0, 200.0), (40.0, 41.0), "envelope"),
        ((200.0, 250.0), (40.0, math.nan), "decay"),
        ((200.0, 250.0), (40.0, 41.0), "spectrum"),
        ((), (), "decay"),
    ],
)
def test_g_curve_validation(axis, values, source):
    with pytest.raises(PreconditionError):
        GCurve(axis, values, source)


def test_g_curve_from_fits_sorts_by_linewidth():
    table = _table()
    results = [FitResult({"g_uev": g}, {}, 0.0, 1, True) for g in (35.0, 45.0)]
    curve = GCurve.from_fits("envelope", table, [40.0, 100.0], results)
    assert curve.gamma_axis == (245.0, 290.0)
    assert curve.g_values == (45.0, 35.0)
    assert curve.sigma_sd == (100.0, 40.0)
    assert curve.rows()[0] == {"gamma_uev": 245.0, "g_uev": 45.0, "sigma_sd_uev": 100.0, "converged": True}


def test_setup_dephasing_from_table():
    setup = CouplingSetup(kappa=energy_to_rate(110.0), gamma=energy_to_rate(5.0), sigma_vib=0.0, delta=700.0)
    gs1, gs2 = setup.dephasing(_table(), 100.0)
    assert gs1 == pytest.approx(energy_to_rate(245.0))
    assert gs2 == pytest.approx(energy_to_rate(235.0))


def test_setup_dephasing_is_clipped_at_zero():
    setup = CouplingSetup(kappa=100.0, gamma=energy_to_rate(300.0), sigma_vib=0.0, delta=700.0)
    assert setup.dephasing(_table(), 100.0) == (0.0, 0.0)


def test_setup_builds_cavity():
    setup = CouplingSetup(kappa=150.0, gamma=8.0, sigma_vib=30.0, delta=700.0)
    cavity = setup.cavity(25.0)
    assert cavity.omega_a_bar == 25.0
    assert cavity.storage_rate == 150.0
    assert cavity.sigma_vib == 30.0
    with pytest.raises(ParameterDomainError):
        CouplingSetup(kappa=0.0, gamma=8.0, sigma_vib=0.0, delta=700.0)


def test_coupling_from_acceleration_inverts_resonant_rate():
    gamma, gamma_star, kappa, g = 7.6, 372.0, 167.0, 60.8
    gamma_cav = gamma + 4 * g * g / (gamma + gamma_star + kappa)
    assert coupling_from_acceleration(gamma_cav, gamma, gamma_star, kappa) == pytest.approx(g)
    with pytest.raises(ParameterDomainError):
        coupling_from_acceleration(gamma - 1.0, gamma, gamma_star, kappa)


def test_g_squared_regression_is_linear():
    x = np.array([0.02, 0.04, 0.06, 0.08])
    report = g_squared_regression(x, np.sqrt(1000.0 * x))
    assert report["slope"] == pytest.approx(1000.0)
    assert report["intercept"] == pytest.approx(0.0, abs=1e-10)
    assert report["r_squared"] == pytest.approx(1.0)
    with pytest.raises(PreconditionError):
        g_squared_regression([0.02, 0.04], [1.0, 2.0])
