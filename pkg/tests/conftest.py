import math
import os
import sys

import pytest
import yaml
from loguru import logger
from scipy.integrate import quad

from cqedfit.model.quantities import energy_to_rate


@pytest.fixture(autouse=True)
def _reset_logging():
    yield
    logger.remove()
    logger.add(sys.stderr, level="WARNING")


@pytest.fixture
def write_config(tmp_path):
    """Factory writing a YAML config next to the test's data files."""

    def _write(data: dict, name: str = "config.yaml"):
        path = tmp_path / name
        path.write_text(yaml.safe_dump(data), encoding="utf-8")
        return path

    return _write


@pytest.fixture(autouse=True)
def _clean_env(monkeypatch):
    for key in list(os.environ):
        if key.startswith("CQEDFIT_"):
            monkeypatch.delenv(key)


def line_integral(f, centres, width, epsrel=1e-11):
    """∫ f over the real line with scipy, split around ``centres``."""
    centres = sorted(centres)
    lo, hi = centres[0] - width, centres[-1] + width
    kw = {"epsabs": 0.0, "epsrel": epsrel, "limit": 2000}
    inner = [c for c in centres if lo < c < hi]
    return math.fsum(
        (
            quad(f, -math.inf, lo, **kw)[0],
            quad(f, lo, hi, points=inner or None, **kw)[0],
            quad(f, hi, math.inf, **kw)[0],
        )
    )


def reference_rates() -> dict[str, float]:
    """(γ, γ*, κ, g) in ns⁻¹ for ħ-values (5, 245, 110, 40) µeV."""
    return {
        "gamma": energy_to_rate(5.0),
        "gamma_star": energy_to_rate(245.0),
        "kappa": energy_to_rate(110.0),
        "g": energy_to_rate(40.0),
    }
