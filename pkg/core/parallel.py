"""
Reproducible trajectory ensembles.

Every trajectory owns a generator derived from ``(seed, index)`` only, and the
index range is cut into chunks whose size does not depend on the worker count.
Chunk results are concatenated in index order before any reduction, so an
ensemble run is bit-identical for ``workers=1`` and ``workers=4``.
"""
from typing import Callable, List, Optional, Sequence, Tuple, TypeVar

import numpy as np
from joblib import Parallel, delayed

from .config import settings
from .errors import ArgumentError

T = TypeVar("T")

SEED_BITS = 63


def trajectory_stream(seed: int, index: int) -> np.random.Generator:
    """Generator for trajectory ``index`` of the ensemble keyed by ``seed``."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))


def ensemble_seed(rng: np.random.Generator) -> int:
    """Draw the ensemble key from a caller-supplied generator."""
    return int(rng.integers(0, 2 ** SEED_BITS))


def chunk_ranges(count: int, chunk: Optional[int] = None) -> List[Tuple[int, int]]:
    size = chunk or settings.ENSEMBLE_CHUNK
    if size < 1:
        raise ArgumentError(f"chunk size must be positive, got {size}")
    return [(start, min(start + size, count)) for start in range(0, count, size)]


def _run_chunk(worker: Callable[[int, np.random.Generator], T], seed: int, start: int, stop: int) -> List[T]:
    return [worker(index, trajectory_stream(seed, index)) for index in range(start, stop)]


def run_ensemble(
    worker: Callable[[int, np.random.Generator], T],
    count: int,
    seed: int,
    workers: Optional[int] = None,
    chunk: Optional[int] = None,
) -> List[T]:
    """
    Run ``worker(index, rng)`` for every index in ``range(count)``.

    Args:
        worker: picklable callable; receives the trajectory index and its own generator
        count: number of trajectories
        seed: ensemble key
        workers: joblib worker count (default from settings)
        chunk: indices per task (default from settings)

    Returns:
        Worker results in index order.
    """
    if count < 0:
        raise ArgumentError(f"trajectory count must be nonnegative, got {count}")
    n_jobs = workers if workers is not None else settings.DEFAULT_WORKERS
    ranges = chunk_ranges(count, chunk)
    if n_jobs <= 1 or len(ranges) <= 1:
        parts = [_run_chunk(worker, seed, start, stop) for start, stop in ranges]
    else:
        parts = Parallel(n_jobs=n_jobs, backend="loky")(
            delayed(_run_chunk)(worker, seed, start, stop) for start, stop in ranges
        )
    return [item for part in parts for item in part]


def batch_means(values: Sequence[float], batches: Optional[int] = None) -> Tuple[float, float]:
    """
    Mean and batch-means standard error of an index-ordered sample.

    Contiguous index blocks form the batches; with fewer samples than batches each
    sample is its own batch.
    """
    data = np.asarray(values, dtype=float)
    if data.size == 0:
        raise ArgumentError("cannot average an empty sample")
    mean = float(data.mean())
    k = min(batches or settings.BATCH_COUNT, data.size)
    if k < 2:
        return mean, 0.0
    blocks = np.array_split(data, k)
    block_means = np.array([b.mean() for b in blocks])
    se = float(block_means.std(ddof=1) / np.sqrt(k))
    return mean, se
