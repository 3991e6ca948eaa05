"""Seeded, chunked, optionally threaded path simulation and batch-means errors."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np

from predlab import rng
from predlab.processes.base import Batch, ProcessModel

#: Upper bound on ``paths * horizon * dim`` per sampled chunk.
MAX_ELEMENTS = 1 << 22
#: Number of batches for batch-means standard errors.
N_BATCHES = 30
#: Stream tag of the main path sampler.
PATH_TAG = "paths"


def chunk_bounds(n_paths: int, horizon: int, dim: int = 1,
                 max_elements: int = MAX_ELEMENTS) -> list[tuple[int, int]]:
    """Contiguous path ranges whose sampled arrays stay under ``max_elements``."""
    per = max(1, max_elements // max(1, horizon * dim))
    return [(s, min(s + per, n_paths)) for s in range(0, n_paths, per)]


def simulate(model: ProcessModel, n_paths: int, horizon: int, seed: int,
             statistic: Callable[[Batch], np.ndarray], *, tag: str = PATH_TAG,
             workers: int = 1, max_elements: int = MAX_ELEMENTS) -> np.ndarray:
    """Apply ``statistic`` to ``n_paths`` sampled paths and stack the per-path rows.

    Path ``i`` always has seed ``derive_seed(seed, i, tag)``, so results do not
    depend on chunking or on ``workers``; chunks are concatenated in path order.
    """
    if n_paths < 1 or horizon < 1:
        raise ValueError("need at least one path and one step")
    bounds = chunk_bounds(n_paths, horizon, model.space.dim, max_elements)

    def run(bound):
        start, stop = bound
        seeds = rng.path_seeds(seed, start, stop, tag)
        return np.asarray(statistic(model.sample_batch(seeds, horizon)))

    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, bounds))
    else:
        parts = [run(b) for b in bounds]
    return np.concatenate(parts, axis=0)


def batch_mean_se(x: np.ndarray, n_batches: int = N_BATCHES) -> tuple[np.ndarray, np.ndarray]:
    """Mean over axis 0 and its batch-means standard error (contiguous path batches)."""
    x = np.asarray(x, dtype=float)
    if len(x) < n_batches:
        raise ValueError(f"need at least {n_batches} paths for batch-means errors")
    means = np.stack([b.mean(axis=0) for b in np.array_split(x, n_batches)])
    se = means.std(axis=0, ddof=1) / math.sqrt(n_batches)
    return x.mean(axis=0), se


def jackknife_se(statistic: Callable[[np.ndarray], float], data: np.ndarray,
                 n_batches: int = N_BATCHES) -> tuple[float, float]:
    """Full-sample statistic and its delete-a-batch jackknife standard error."""
    data = np.asarray(data)
    if len(data) < n_batches:
        raise ValueError(f"need at least {n_batches} paths for jackknife errors")
    groups = np.array_split(np.arange(len(data)), n_batches)
    full = float(statistic(data))
    leave = np.array([statistic(np.delete(data, g, axis=0)) for g in groups])
    se = math.sqrt((n_batches - 1) / n_batches * np.sum((leave - leave.mean()) ** 2))
    return full, se
