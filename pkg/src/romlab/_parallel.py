"""Deterministic sample-parallel mapping.

Results are returned in index order regardless of worker count, and all
reductions downstream run over that ordered list, so the parallelism
degree never changes numerical output.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor


def indexed_map(fn, count: int, jobs: int = 1) -> list:
    """[fn(0), ..., fn(count-1)], computed with up to ``jobs`` threads."""
    if jobs <= 1 or count <= 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, range(count)))
