"""Thread-count control for internally parallel operations.

The SLOWFAST_THREADS environment variable caps the worker count.  Results
are always merged in input order, so outputs never depend on scheduling.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

from .errors import InvalidInputError

THREADS_ENV_VAR = "SLOWFAST_THREADS"

_T = TypeVar("_T")
_R = TypeVar("_R")


def thread_count() -> int:
    """Worker count to use: SLOWFAST_THREADS when set, else min(8, cpus)."""
    raw = os.environ.get(THREADS_ENV_VAR)
    if raw is None:
        return min(8, os.cpu_count() or 1)
    try:
        n = int(raw)
    except ValueError:
        raise InvalidInputError(
            f"{THREADS_ENV_VAR} must be a positive integer, got {raw!r}"
        ) from None
    if n < 1:
        raise InvalidInputError(
            f"{THREADS_ENV_VAR} must be a positive integer, got {raw!r}"
        )
    return n


def map_ordered(fn: Callable[[_T], _R], items: Iterable[_T]) -> list[_R]:
    """Apply ``fn`` to every item, preserving input order in the result."""
    seq = list(items)
    workers = min(thread_count(), len(seq))
    if workers <= 1:
        return [fn(x) for x in seq]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, seq))
