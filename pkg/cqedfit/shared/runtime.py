from collections.abc import Callable, Sequence
from typing import Any, TypeVar

import anyio
import anyio.to_thread
from loguru import logger

from .utils import default_threads

__all__ = ("SweepRuntime",)

T = TypeVar("T")
R = TypeVar("R")


class SweepRuntime:
    """Bounded thread pool for independent fits over a parameter grid.

    Results are returned in input order whatever the thread count.
    """

    def __init__(self, threads: int | None = None):
        self.threads = max(1, threads or default_threads())

    def map(self, fn: Callable[[T], R], items: Sequence[T]) -> list[R]:
        if not items:
            return []
        if self.threads == 1 or len(items) == 1:
            return [fn(item) for item in items]
        return anyio.run(self._map_async, fn, list(items))

    async def _map_async(self, fn: Callable[[T], R], items: list[T]) -> list[R]:
        limiter = anyio.CapacityLimiter(self.threads)
        results: list[Any] = [None] * len(items)

        async def worker(index: int) -> None:
            results[index] = await anyio.to_thread.run_sync(fn, items[index], limiter=limiter)

        logger.debug(f"Sweeping {len(items)} points on {self.threads} threads")
        async with anyio.create_task_group() as tg:
            for index in range(len(items)):
                tg.start_soon(worker, index)
        return results
