"""CSV curve files.

Comma separated, '.' decimals, UTF-8, at most one header line. Energies are
stored in µeV and times in ps; in memory times are ns.
"""

from collections.abc import Sequence
from pathlib import Path
from typing import Literal

import numpy as np
from loguru import logger

from ..fitting.coupling import GCurve, Source
from ..fitting.spectra import LinewidthTable
from ..model.lineshape import GridSpec, SampledCurve
from ..shared.exceptions import CqedFitError, InputFormatError, InputNotFoundError

__all__ = (
    "AxisUnit",
    "read_columns",
    "read_curve",
    "read_g_curve",
    "read_linewidth_table",
    "read_series",
    "write_columns",
    "write_curve",
    "write_g_curve",
    "write_linewidth_table",
)

AxisUnit = Literal["uev", "ps"]

_PS_PER_NS = 1000.0
_FMT = "%.17g"


def _is_numeric_row(line: str) -> bool:
    try:
        [float(cell) for cell in line.strip().split(",")]
    except ValueError:
        return False
    return True


def read_columns(path: str | Path, min_columns: int = 2) -> np.ndarray:
    """All numeric rows of a CSV file as a 2-D array."""
    path = Path(path)
    if not path.is_file():
        raise InputNotFoundError(f"input file not found: {path}")
    try:
        with path.open(encoding="utf-8") as f:
            first = f.readline()
        skip = 0 if _is_numeric_row(first) else 1
        data = np.loadtxt(path, delimiter=",", skiprows=skip, ndmin=2, encoding="utf-8")
    except UnicodeDecodeError as e:
        raise InputFormatError(f"{path}: not UTF-8 text") from e
    except ValueError as e:
        raise InputFormatError(f"{path}: {e}") from e
    if data.shape[0] == 0:
        raise InputFormatError(f"{path}: no data rows")
    if data.shape[1] < min_columns:
        raise InputFormatError(f"{path}: expected at least {min_columns} columns, got {data.shape[1]}")
    if not np.all(np.isfinite(data)):
        raise InputFormatError(f"{path}: non-finite values")
    logger.debug(f"Read {data.shape[0]} rows x {data.shape[1]} columns from {path}")
    return data


def read_series(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """First two columns, without any grid requirement (power series and the like)."""
    data = read_columns(path)
    return data[:, 0].copy(), data[:, 1].copy()


def read_curve(path: str | Path, unit: AxisUnit = "uev") -> SampledCurve:
    """Uniformly sampled curve from the first two columns."""
    x, y = read_series(path)
    if unit == "ps":
        x = x / _PS_PER_NS
    try:
        grid = GridSpec.from_axis(x)
        return SampledCurve.on(grid, y)
    except CqedFitError as e:
        raise InputFormatError(f"{path}: {e}") from e


def write_columns(path: str | Path, header: Sequence[str], columns: Sequence) -> Path:
    path = Path(path)
    data = np.column_stack([np.asarray(c, dtype=float) for c in columns])
    if data.shape[1] != len(header):
        raise ValueError("header and columns differ in length")
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, data, fmt=_FMT, delimiter=",", header=",".join(header), comments="", encoding="utf-8")
    return path


def write_curve(
    path: str | Path,
    curve: SampledCurve,
    value_name: str = "value",
    unit: AxisUnit = "uev",
    **extra: Sequence[float],
) -> Path:
    """Axis, values and any extra equally long columns (plot-ready)."""
    axis = curve.axis * (_PS_PER_NS if unit == "ps" else 1.0)
    axis_name = "time_ps" if unit == "ps" else "energy_uev"
    header = [axis_name, value_name, *extra]
    return write_columns(path, header, [axis, curve.values, *extra.values()])


def write_linewidth_table(path: str | Path, table: LinewidthTable) -> Path:
    return write_columns(
        path,
        ["sigma_sd_uev", "gamma1_uev", "gamma2_uev", "ssr", "converged"],
        [table.sigma_sd_grid, table.gamma1, table.gamma2, table.ssr, table.converged],
    )


def read_linewidth_table(path: str | Path) -> LinewidthTable:
    data = read_columns(path, min_columns=4)
    converged = data[:, 4] != 0 if data.shape[1] > 4 else np.ones(data.shape[0], dtype=bool)
    try:
        return LinewidthTable(
            sigma_sd_grid=tuple(data[:, 0]),
            gamma1=tuple(data[:, 1]),
            gamma2=tuple(data[:, 2]),
            ssr=tuple(data[:, 3]),
            converged=tuple(bool(c) for c in converged),
        )
    except CqedFitError as e:
        raise InputFormatError(f"{path}: {e}") from e


def write_g_curve(path: str | Path, curve: GCurve) -> Path:
    rows = curve.rows()
    return write_columns(
        path,
        ["gamma_uev", "g_uev", "sigma_sd_uev", "converged"],
        [
            [r["gamma_uev"] for r in rows],
            [r["g_uev"] for r in rows],
            [r["sigma_sd_uev"] for r in rows],
            [r["converged"] for r in rows],
        ],
    )


def read_g_curve(path: str | Path, source: Source) -> GCurve:
    data = read_columns(path)
    data = data[np.argsort(data[:, 0], kind="stable")]
    try:
        return GCurve(
            gamma_axis=tuple(data[:, 0]),
            g_values=tuple(data[:, 1]),
            source=source,
            sigma_sd=tuple(data[:, 2]) if data.shape[1] > 2 else (),
            converged=tuple(bool(c) for c in data[:, 3]) if data.shape[1] > 3 else (),
        )
    except CqedFitError as e:
        raise InputFormatError(f"{path}: {e}") from e
