"""Order-preserving replication map.

Work is cut into fixed-size chunks independent of the worker count, and
results are reassembled by index, so output never depends on ``threads``.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, TypeVar

T = TypeVar("T")

CHUNK = 64


def default_threads() -> int:
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)


def map_reps(fn: Callable[[int], T], reps: int, threads: int = 1) -> list[T]:
    """``[fn(0), ..., fn(reps - 1)]``, evaluated on up to ``threads`` workers."""
    if threads <= 1 or reps <= CHUNK:
        return [fn(r) for r in range(reps)]

    def run(lo: int) -> list[T]:
        return [fn(r) for r in range(lo, min(lo + CHUNK, reps))]

    with ThreadPoolExecutor(max_workers=threads) as pool:
        chunks = list(pool.map(run, range(0, reps, CHUNK)))
    return [x for chunk in chunks for x in chunk]
