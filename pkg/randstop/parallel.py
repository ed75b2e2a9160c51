"""Fixed-block work partition shared by simulation, estimation and fitting.

The block size is a constant, never derived from the worker count, so every
reduction sees the same partial results in the same order however many
threads run them.
"""

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Tuple, TypeVar

import numpy as np
from more_itertools import chunked

logger = logging.getLogger(__name__)

BLOCK_SIZE = 16384

T = TypeVar("T")

_default_threads: Optional[int] = None


def set_default_threads(threads: Optional[int]):
    """Cap the worker count used when a call does not pass ``threads``."""
    global _default_threads
    if threads is not None and threads < 1:
        raise ValueError(f"threads must be >= 1, got {threads}")
    _default_threads = threads


def resolve_threads(threads: Optional[int] = None) -> int:
    if threads is None:
        threads = _default_threads
    if threads is None:
        threads = os.cpu_count() or 1
    return max(1, int(threads))


def block_ranges(num_items: int, block_size: int = BLOCK_SIZE) -> List[Tuple[int, int, int]]:
    """(block index, start, stop) triples covering ``range(num_items)``."""
    ranges = []
    for index, chunk in enumerate(chunked(range(num_items), block_size)):
        ranges.append((index, chunk[0], chunk[-1] + 1))
    return ranges


def map_blocks(
    fn: Callable[[int, int, int], T],
    num_items: int,
    threads: Optional[int] = None,
    block_size: int = BLOCK_SIZE,
) -> List[T]:
    """Apply ``fn(block, start, stop)`` to every block, results in block order."""
    ranges = block_ranges(num_items, block_size)
    workers = min(resolve_threads(threads), max(1, len(ranges)))
    if workers == 1:
        return [fn(*r) for r in ranges]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda r: fn(*r), ranges))


def ordered_sum(partials: List[np.ndarray]) -> np.ndarray:
    """Sum block partials left to right."""
    total = np.array(partials[0], dtype=float, copy=True)
    for partial in partials[1:]:
        total = total + partial
    return total
