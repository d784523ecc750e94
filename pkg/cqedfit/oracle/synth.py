"""Seeded Poisson count generation from model curves."""

from collections.abc import Sequence

import numpy as np
from loguru import logger

from ..model.lineshape import SampledCurve
from ..shared.exceptions import ParameterDomainError, PreconditionError

__all__ = ("expected_counts", "synth_generate")


def expected_counts(model: SampledCurve, total_counts: float) -> np.ndarray:
    """Per-bin expectation proportional to ``model`` summing to ``total_counts``."""
    if not total_counts > 0:
        raise ParameterDomainError(f"total_counts must be > 0, got {total_counts!r}")
    values = model.values
    if np.any(values < 0):
        raise PreconditionError("model curve must be nonnegative")
    total = float(values.sum())
    if total <= 0:
        raise PreconditionError("model curve is identically zero")
    return values * (total_counts / total)


def synth_generate(
    model: SampledCurve, total_counts: float, seed: int | Sequence[int]
) -> SampledCurve:
    """Poisson counts per bin on the model's grid, deterministic per ``seed``."""
    rng = np.random.default_rng(seed)
    counts = rng.poisson(expected_counts(model, total_counts)).astype(float)
    logger.debug(f"Synthesised {counts.sum():.0f} counts on {counts.size} bins (seed {seed})")
    return SampledCurve(model.start, model.step, counts)
