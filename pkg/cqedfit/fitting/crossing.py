"""Intersection of the envelope and decay g curves."""

from dataclasses import dataclass, field
from typing import Any

import numpy as np
from loguru import logger
from scipy.optimize import brentq

from ..shared.exceptions import NoCrossingError, PreconditionError
from .coupling import GCurve

__all__ = ("CrossingResult", "find_crossing")

_TIE_RTOL = 1e-9


@dataclass(frozen=True, slots=True)
class CrossingResult:
    """Primary crossing (smallest linewidth) of the envelope and decay g curves."""

    gamma_star_total: float
    g_cross: float
    all_crossings: tuple[tuple[float, float], ...]
    degenerate: bool = False
    curves: dict[str, GCurve] = field(default_factory=dict, compare=False)

    def to_json(self) -> dict[str, Any]:
        return {
            "gamma_star_total_uev": self.gamma_star_total,
            "g_cross_uev": self.g_cross,
            "all_crossings": [{"gamma_uev": x, "g_uev": y} for x, y in self.all_crossings],
            "degenerate": self.degenerate,
        }


def find_crossing(env_curve: GCurve, dec_curve: GCurve) -> CrossingResult:
    env_x, env_y = np.asarray(env_curve.gamma_axis), np.asarray(env_curve.g_values)
    dec_x, dec_y = np.asarray(dec_curve.gamma_axis), np.asarray(dec_curve.g_values)
    lo, hi = max(env_x[0], dec_x[0]), min(env_x[-1], dec_x[-1])
    if lo > hi:
        raise PreconditionError(
            f"g curves do not overlap: [{env_x[0]}, {env_x[-1]}] vs [{dec_x[0]}, {dec_x[-1]}]"
        )
    axis = np.union1d(env_x, dec_x)
    axis = axis[(axis >= lo) & (axis <= hi)]

    def gap(x):
        return np.interp(x, env_x, env_y) - np.interp(x, dec_x, dec_y)

    diff = gap(axis)
    scale = max(float(np.max(np.abs(env_y))), float(np.max(np.abs(dec_y))), 1e-300)
    curves = {"envelope": env_curve, "decay": dec_curve}
    if np.all(np.abs(diff) <= _TIE_RTOL * scale):
        logger.warning("Envelope and decay g curves coincide over their whole overlap")
        points = tuple((float(x), float(np.interp(x, env_x, env_y))) for x in axis)
        return CrossingResult(points[0][0], points[0][1], points, True, curves)

    crossings: list[float] = []
    for i, x in enumerate(axis):
        if diff[i] == 0:
            crossings.append(float(x))
        elif i + 1 < axis.size and diff[i] * diff[i + 1] < 0:
            crossings.append(float(brentq(gap, x, axis[i + 1], xtol=1e-12 * max(abs(x), 1.0))))
    if not crossings:
        min_gap = float(np.min(np.abs(diff)))
        raise NoCrossingError(
            f"envelope and decay g curves do not cross (closest gap {min_gap:.4g} µeV)",
            min_gap=min_gap,
        )
    points = tuple(
        (x, float(np.interp(x, env_x, env_y))) for x in sorted(dict.fromkeys(crossings))
    )
    if len(points) > 1:
        logger.warning(f"{len(points)} crossings found, reporting the smallest linewidth")
    logger.info(f"Crossing at ħ(γ+γ*)={points[0][0]:.1f} µeV, g={points[0][1]:.2f} µeV")
    return CrossingResult(points[0][0], points[0][1], points, False, curves)
