"""Thread-pool helper honouring the ``LAGFLUX_THREADS`` cap."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def max_workers() -> int:
    """Worker count from ``LAGFLUX_THREADS`` (default: CPU count, minimum 1)."""
    raw = os.environ.get("LAGFLUX_THREADS", "").strip()
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise ValueError(f"LAGFLUX_THREADS must be an integer, got {raw!r}") from None
    return os.cpu_count() or 1


def thread_map(fn: Callable[[T], R], items: Iterable[T]) -> List[R]:
    """``list(map(fn, items))``, possibly on threads; order is preserved."""
    items = list(items)
    workers = min(max_workers(), len(items))
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
