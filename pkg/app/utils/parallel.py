# app/utils/parallel.py
import sys
from functools import partial
from typing import Callable, Sequence, TypeVar

import anyio

if sys.version_info < (3, 11):
    from exceptiongroup import BaseExceptionGroup

from app.core.config import settings

T = TypeVar("T")
R = TypeVar("R")


def chunk_bounds(n: int, chunk_size: int | None = None) -> list[tuple[int, int, int]]:
    """(chunk_index, start, stop) triples covering range(n)."""
    size = chunk_size or settings.CHUNK_SIZE
    return [(i, start, min(start + size, n)) for i, start in enumerate(range(0, n, size))]


async def _collect_result(acc: list, idx: int, fn: Callable[[], R]) -> None:
    """Thread worker; appends (idx, result) so the caller can restore order."""
    result = await anyio.to_thread.run_sync(fn)
    acc.append((idx, result))


async def _run_batches(fn: Callable[[T], R], items: Sequence[T], workers: int) -> list[R]:
    results: list[tuple[int, R]] = []
    for batch_start in range(0, len(items), workers):
        batch = range(batch_start, min(batch_start + workers, len(items)))
        async with anyio.create_task_group() as tg:
            for idx in batch:
                tg.start_soon(_collect_result, results, idx, partial(fn, items[idx]))
    return [r for _, r in sorted(results, key=lambda x: x[0])]


def map_chunks(fn: Callable[[T], R], items: Sequence[T], workers: int | None = None) -> list[R]:
    """
    Apply `fn` to every item on worker threads, `workers` at a time.
    Output order follows `items`, never completion order.
    """
    workers = settings.WORKERS if workers is None else workers
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    try:
        return anyio.run(_run_batches, fn, items, workers)
    except BaseExceptionGroup as group:
        # surface the first worker error as itself
        exc: BaseException = group
        while isinstance(exc, BaseExceptionGroup):
            exc = exc.exceptions[0]
        raise exc from None
