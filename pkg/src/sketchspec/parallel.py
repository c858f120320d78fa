"""Ordered parallel map over independent trials.

``SKETCHSPEC_THREADS`` caps the worker count (default: CPU count). Results
come back in input order whatever the schedule, so aggregates never depend
on thread timing.
"""
import os
from concurrent.futures import ThreadPoolExecutor


def thread_count():
    raw = os.environ.get("SKETCHSPEC_THREADS")
    n = os.cpu_count() or 1
    if raw:
        try:
            n = min(n, int(raw)) if int(raw) > 0 else n
        except ValueError:
            pass
    return max(1, n)


def ordered_map(fn, items, threads=None):
    items = list(items)
    threads = thread_count() if threads is None else threads
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
