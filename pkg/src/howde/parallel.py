"""Deterministic parallel map over independent per-user work.

The HOWDE_THREADS environment variable caps worker processes (default:
machine parallelism). Results keep task order, so output is identical at
any parallelism level.
"""

from __future__ import annotations

import multiprocessing as mp
import os


def thread_count(explicit: int | None = None) -> int:
    if explicit is not None:
        return max(1, int(explicit))
    env = os.environ.get("HOWDE_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def chunked(items, n_chunks: int) -> list:
    """Split items into at most n_chunks contiguous, order-preserving chunks."""
    items = list(items)
    if not items:
        return []
    n_chunks = max(1, min(n_chunks, len(items)))
    size, rem = divmod(len(items), n_chunks)
    out = []
    pos = 0
    for i in range(n_chunks):
        step = size + (1 if i < rem else 0)
        out.append(items[pos:pos + step])
        pos += step
    return out


def ordered_map(fn, tasks, threads: int | None = None) -> list:
    """Map fn over tasks, in order, optionally across worker processes."""
    tasks = list(tasks)
    n = thread_count(threads)
    if n <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    ctx = mp.get_context("fork")
    with ctx.Pool(processes=min(n, len(tasks))) as pool:
        return list(pool.imap(fn, tasks, chunksize=1))
