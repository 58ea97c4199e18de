"""
Ordered chunked map over a thread pool
"""
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Sequence, TypeVar

from loguru import logger

T = TypeVar("T")
R = TypeVar("R")


def _chunks(items: Sequence[T], count: int) -> List[Sequence[T]]:
    size = -(-len(items) // count)
    return [items[i:i + size] for i in range(0, len(items), size)]


def map_chunks(fn: Callable[[Sequence[T]], List[R]], items: Sequence[T], threads: int = 1) -> List[R]:
    """
    Apply fn to contiguous chunks of items and concatenate results in input order

    Args:
        fn: Maps a chunk to a list of results of the same length
        items: Work items
        threads: Worker count; 1 runs serially in the caller's thread

    Returns:
        list: Results in the order of items
    """
    if threads < 1:
        threads = 1
    if threads == 1 or len(items) <= 1:
        return list(fn(items))

    chunks = _chunks(items, min(threads, len(items)))
    logger.debug(f"🔄 Mapping {len(items)} items over {len(chunks)} chunks ({threads} threads)")
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(fn, chunks))
    out: List[R] = []
    for part in parts:
        out.extend(part)
    return out
