"""
Utility functions for the RCP toolkit
"""
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Sequence, TypeVar

import numpy as np
from loguru import logger

from config.settings import PARALLEL_CHUNK_SIZE, PRNG_NAME, THREADS
from core.errors import InvalidArgumentError

T = TypeVar("T")
R = TypeVar("R")


def make_rng(seed: int) -> np.random.Generator:
    """
    Build the toolkit's random generator for a seed.

    Args:
        seed: Any integer; reduced modulo 2**64.

    Returns:
        numpy Generator backed by PCG64.
    """
    bit_generator = getattr(np.random, PRNG_NAME)
    return np.random.Generator(bit_generator(int(seed) % (1 << 64)))


def child_seed(seed: int, index: int) -> int:
    """Derive an independent 64-bit seed for sub-task `index`."""
    seq = np.random.SeedSequence([int(seed) % (1 << 64), int(index)])
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def parallel_map(
    func: Callable[[T], R],
    items: Iterable[T],
    threads: int = THREADS,
    chunk_size: int = PARALLEL_CHUNK_SIZE,
) -> List[R]:
    """
    Apply `func` to every item, preserving input order.

    Args:
        func: Pure function of one item.
        items: Work items.
        threads: Worker cap; 1 runs inline.
        chunk_size: Items handed to a worker at once.

    Returns:
        Results in the order of `items`.
    """
    items = list(items)
    if threads <= 1 or len(items) <= chunk_size:
        return [func(item) for item in items]

    chunks = [items[i:i + chunk_size] for i in range(0, len(items), chunk_size)]
    logger.debug(f"parallel_map: {len(items)} items in {len(chunks)} chunks on {threads} threads")
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = pool.map(lambda chunk: [func(item) for item in chunk], chunks)
    return [result for part in parts for result in part]


def as_index_set(indices: Sequence[int], n: int) -> np.ndarray:
    """
    Validate a support and return it sorted.

    Raises:
        InvalidArgumentError: empty, duplicated or out-of-range indices.
    """
    arr = np.asarray(list(indices), dtype=np.int64)
    if arr.ndim != 1 or arr.size == 0:
        raise InvalidArgumentError("Support must be a nonempty index set")
    if np.unique(arr).size != arr.size:
        raise InvalidArgumentError(f"Support has duplicate indices: {arr.tolist()}")
    if arr.min() < 0 or arr.max() >= n:
        raise InvalidArgumentError(f"Support index out of range [0, {n}): {arr.tolist()}")
    return np.sort(arr)


def support_of(x: np.ndarray) -> np.ndarray:
    """Indices of the nonzero entries of a vector."""
    return np.flatnonzero(np.asarray(x))


def relative_close(a: float, b: float, rel: float, floor: float = 1.0) -> bool:
    """|a - b| <= rel * max(floor, |a|, |b|)."""
    return abs(a - b) <= rel * max(floor, abs(a), abs(b))
