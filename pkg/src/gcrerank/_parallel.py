from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

from .params import resolve_workers


def spans(n, size):
    return [(start, min(start + size, n)) for start in range(0, n, size)]


def map_spans(fn, n, size, workers=None):
    """Apply ``fn(start, stop)`` over fixed-size row spans, in span order.

    Spans depend only on ``n`` and ``size``, never on the worker count, so
    every row is computed by the same arithmetic for any ``workers``.
    """
    parts = spans(n, size)
    workers = resolve_workers(workers)
    if workers == 1 or len(parts) == 1:
        return [fn(a, b) for a, b in parts]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda ab: fn(*ab), parts))
