import os
import platform
from collections.abc import Callable
from typing import Any, TypeVar

import numpy as np
import psutil
from loguru import logger
from tenacity import (
    RetryError,
    Retrying,
    retry_if_result,
    stop_after_attempt,
)

__all__ = (
    "default_threads",
    "get_memory_usage",
    "get_system_info",
    "perturbed_start",
    "retry_fit",
)

T = TypeVar("T")


def retry_fit(
    attempt: Callable[[int], T],
    *,
    restarts: int,
    is_converged: Callable[[T], bool] = lambda r: bool(getattr(r, "converged", True)),
    better: Callable[[T, T], bool] | None = None,
) -> T:
    """Run ``attempt(n)`` until it converges or ``restarts`` extra tries are used.

    ``attempt`` receives the zero-based attempt number so that it can derive a
    deterministic perturbation of its start point. The best non-converged result
    is returned when every attempt fails to converge.
    """
    best: list[T] = []

    def _run(n: int) -> T:
        result = attempt(n)
        if not best or (better is not None and better(result, best[0])):
            best[:] = [result]
        return result

    retrying = Retrying(
        stop=stop_after_attempt(max(restarts, 0) + 1),
        retry=retry_if_result(lambda r: not is_converged(r)),
        before_sleep=lambda retry_state: logger.info(
            f"Fit did not converge; restart #{retry_state.attempt_number}..."
        ),
        reraise=True,
    )
    try:
        for tentative in retrying:
            with tentative:
                result = _run(tentative.retry_state.attempt_number - 1)
            if not tentative.retry_state.outcome.failed:
                tentative.retry_state.set_result(result)
        return result
    except RetryError:
        return best[0]


def perturbed_start(
    x0: np.ndarray, lower: np.ndarray, upper: np.ndarray, attempt: int
) -> np.ndarray:
    """Deterministic start point for restart number ``attempt`` (0 keeps ``x0``)."""
    x0 = np.asarray(x0, dtype=float)
    if attempt <= 0:
        return x0
    rng = np.random.default_rng(attempt)
    scale = np.where(np.isfinite(upper - lower), 0.1 * (upper - lower), 0.1)
    scale = np.where(scale > 0, scale, 0.1 * np.maximum(np.abs(x0), 1.0))
    x = x0 + rng.uniform(-1.0, 1.0, size=x0.shape) * scale
    return np.clip(x, lower, upper)


def default_threads() -> int:
    return psutil.cpu_count(logical=False) or psutil.cpu_count() or 1


def get_system_info() -> dict[str, Any]:
    return {
        "platform": platform.platform(),
        "python_version": platform.python_version(),
        "cpu_count": psutil.cpu_count(),
        "memory_total_gb": round(psutil.virtual_memory().total / (1024**3), 2),
        "process_id": os.getpid(),
    }


def get_memory_usage() -> dict[str, Any]:
    process = psutil.Process()
    memory_info = process.memory_info()
    mb_factor = 1024 * 1024
    return {
        "rss_mb": round(memory_info.rss / mb_factor, 2),
        "vms_mb": round(memory_info.vms / mb_factor, 2),
        "percent": process.memory_percent(),
    }
