"""Fixed-grid block scheduling for data-parallel passes.

The grid is anchored at sample 0 with a constant block size, independent of
the worker count. Per-block results reduced in ascending block order are
therefore bit-identical for any number of threads: threads only change who
computes a block, never what is computed or in which order partials combine.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, TypeVar

BLOCK_SIZE = 2048

T = TypeVar("T")


def block_bounds(n_samples: int, start: int = 0, stop: int | None = None) -> list[tuple[int, int]]:
    """Grid-aligned ``(start, stop)`` pairs covering ``[start, stop)``.

    Interior boundaries always fall on multiples of ``BLOCK_SIZE`` counted
    from sample 0, so two adjacent ranges decompose into exactly the same
    blocks as the union range.
    """
    if stop is None:
        stop = n_samples
    if not 0 <= start <= stop <= n_samples:
        raise ValueError(f"invalid sample range [{start}, {stop}) for {n_samples} samples")
    bounds = []
    s = start
    while s < stop:
        e = min(stop, (s // BLOCK_SIZE + 1) * BLOCK_SIZE)
        bounds.append((s, e))
        s = e
    return bounds


def map_blocks(
    fn: Callable[[int, int], T],
    n_samples: int,
    n_threads: int = 1,
    start: int = 0,
    stop: int | None = None,
) -> list[T]:
    """Apply ``fn(block_start, block_stop)`` to every grid block.

    Results come back in ascending block order regardless of ``n_threads``.
    ``fn`` must not mutate shared state (writing to disjoint output slices
    is fine).
    """
    bounds = block_bounds(n_samples, start, stop)
    if n_threads <= 1 or len(bounds) <= 1:
        return [fn(s, e) for s, e in bounds]
    with ThreadPoolExecutor(max_workers=n_threads) as pool:
        return list(pool.map(lambda se: fn(se[0], se[1]), bounds))
