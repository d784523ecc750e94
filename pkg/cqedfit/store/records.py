import json
import math
from collections.abc import Mapping, Sequence
from pathlib import Path
from typing import Any

import numpy as np
from loguru import logger

from ..fitting.coupling import GCurve
from ..fitting.spectra import LinewidthTable
from ..model.lineshape import SampledCurve
from ..shared.config import Config
from ..shared.config_keys import ConfigKeys
from ..shared.exceptions import InputFormatError, InputNotFoundError
from .curves import AxisUnit, write_columns, write_curve, write_g_curve, write_linewidth_table

__all__ = ("ArtifactStore", "dumps_record", "read_json", "to_plain")


def to_plain(value: Any) -> Any:
    """JSON-ready copy: numpy scalars unwrapped, tuples listed, non-finite floats null."""
    if isinstance(value, Mapping):
        return {str(k): to_plain(v) for k, v in value.items()}
    if isinstance(value, np.ndarray):
        return [to_plain(v) for v in value.tolist()]
    if isinstance(value, (list, tuple)):
        return [to_plain(v) for v in value]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, complex):
        return {"real": to_plain(value.real), "imag": to_plain(value.imag)}
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if hasattr(value, "to_json"):
        return to_plain(value.to_json())
    return value


def dumps_record(record: Any) -> str:
    return json.dumps(to_plain(record), ensure_ascii=False, indent=2, sort_keys=True)


def read_json(path: str | Path) -> dict[str, Any]:
    path = Path(path)
    if not path.is_file():
        raise InputNotFoundError(f"input file not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise InputFormatError(f"{path}: {e}") from e
    if not isinstance(data, dict):
        raise InputFormatError(f"{path}: JSON root must be an object")
    return data


class ArtifactStore:
    """Output directory of one command run; remembers what it wrote."""

    def __init__(self, out_dir: str | Path | None = None, config: Config | None = None):
        self.config = config or Config()
        if out_dir is None:
            out_dir = self.config.get(ConfigKeys.RUN_OUT_DIR)
        self.out_dir = Path(out_dir)
        self.written: list[Path] = []

    def path(self, name: str) -> Path:
        return self.out_dir / name

    def _record(self, path: Path) -> Path:
        self.written.append(path)
        logger.debug(f"Wrote {path}")
        return path

    def write_json(self, name: str, record: Any) -> Path:
        path = self.path(name)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(dumps_record(record) + "\n", encoding="utf-8")
        return self._record(path)

    def write_columns(self, name: str, header: Sequence[str], columns: Sequence) -> Path:
        return self._record(write_columns(self.path(name), header, columns))

    def write_curve(
        self,
        name: str,
        curve: SampledCurve,
        value_name: str = "value",
        unit: AxisUnit = "uev",
        **extra: Sequence[float],
    ) -> Path:
        return self._record(write_curve(self.path(name), curve, value_name, unit, **extra))

    def write_linewidth_table(self, name: str, table: LinewidthTable) -> Path:
        return self._record(write_linewidth_table(self.path(name), table))

    def write_g_curve(self, name: str, curve: GCurve) -> Path:
        return self._record(write_g_curve(self.path(name), curve))

    def manifest(self) -> list[str]:
        return [p.name for p in self.written]
