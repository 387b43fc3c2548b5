"""Order-preserving fan-out for independent sweep points."""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor

WORKER_CAP_ENV = "PHASEGATE_MAX_WORKERS"


def worker_count(requested: int) -> int:
    requested = max(1, int(requested))
    cap = os.environ.get(WORKER_CAP_ENV)
    if cap:
        requested = min(requested, max(1, int(cap)))
    return requested


def ordered_map(func, items, workers: int = 1) -> list:
    """``[func(x) for x in items]``, optionally spread over processes.

    Results always come back in input order.
    """
    items = list(items)
    workers = worker_count(workers)
    if workers == 1 or len(items) < 2:
        return [func(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(func, items, chunksize=max(1, len(items) // (4 * workers))))
