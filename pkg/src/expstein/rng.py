"""Deterministic random streams.

Every random quantity is drawn from a generator keyed by
``(master_seed, stream name, index)``.  Replicates are grouped into blocks
of fixed size; block ``b`` always gets the same stream, so results do not
depend on how many worker threads process the blocks.
"""
from __future__ import annotations

import os
import zlib
from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np

BLOCK_SIZE = 8192
THREADS_ENV = "EXPSTEIN_THREADS"


def _name_key(name: str) -> int:
    return zlib.crc32(name.encode("utf-8"))


def stream(seed: int, name: str, *index: int) -> np.random.Generator:
    """Independent generator for ``(seed, name, *index)``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(_name_key(name), *map(int, index)))
    return np.random.Generator(np.random.PCG64(ss))


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def run_blocks(
    fn: Callable[[np.random.Generator, int], np.ndarray],
    reps: int,
    seed: int,
    name: str,
    threads: int | None = None,
    block_size: int = BLOCK_SIZE,
) -> np.ndarray:
    """Run ``fn(rng, count)`` over fixed replicate blocks and concatenate in order.

    ``fn`` must return an array whose first axis has length ``count``.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    sizes = [block_size] * (reps // block_size)
    if reps % block_size:
        sizes.append(reps % block_size)
    jobs = [(stream(seed, name, b), k) for b, k in enumerate(sizes)]
    threads = threads or default_threads()
    if threads == 1 or len(jobs) == 1:
        parts = [fn(r, k) for r, k in jobs]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda job: fn(*job), jobs))
    return np.concatenate(parts, axis=0)
