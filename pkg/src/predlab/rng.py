"""Counter-based random streams keyed by 64-bit path seeds.

Every draw is a pure function of ``(path_seed, step, slot)``::

    u = splitmix64(path_seed + (counter + 1) * GOLDEN) / 2**64,   counter = step * SLOTS + slot

which is the output stream of a SplittableRandom generator seeded with
``path_seed``, addressed by position instead of consumed sequentially.
Consequences relied on elsewhere:

* a path depends only on its own seed, so batching, chunking and the
  number of workers never change a single bit of output;
* draws for step ``t`` do not depend on the horizon, so sampling ``n``
  and ``2n`` steps from the same seed gives prefix-consistent paths.

Path seeds are derived from a master seed as
``mix64(mix64(master ^ tag_hash(tag)) + GOLDEN * (index + 1))`` where
``tag_hash`` is the first 8 bytes (little endian) of BLAKE2b of the UTF-8 tag.
"""
from __future__ import annotations

import hashlib

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB

#: Number of independent draws addressable per step.
SLOTS = 256

_U_GOLDEN = np.uint64(GOLDEN)
_U_M1 = np.uint64(_M1)
_U_M2 = np.uint64(_M2)
_S30, _S27, _S31, _S11 = (np.uint64(s) for s in (30, 27, 31, 11))
_INV53 = 2.0**-53


def mix64(z: int) -> int:
    """SplitMix64 finalizer on a Python int."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def _mix64_array(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> _S30)) * _U_M1
    z = (z ^ (z >> _S27)) * _U_M2
    return z ^ (z >> _S31)


def tag_hash(tag: str) -> int:
    return int.from_bytes(hashlib.blake2b(tag.encode("utf-8"), digest_size=8).digest(), "little")


def derive_seed(master: int, index: int, tag: str = "") -> int:
    """Seed of path ``index`` under ``master`` for stream ``tag``."""
    base = mix64((master & MASK64) ^ tag_hash(tag))
    return mix64(base + GOLDEN * (index + 1))


def path_seeds(master: int, start: int, stop: int, tag: str = "") -> np.ndarray:
    """Vectorized :func:`derive_seed` for indices ``start..stop-1``."""
    base = np.uint64(mix64((master & MASK64) ^ tag_hash(tag)))
    idx = np.arange(start + 1, stop + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return _mix64_array(base + idx * _U_GOLDEN)


def substream(seeds: np.ndarray, tag: str) -> np.ndarray:
    """Independent per-path seeds for an auxiliary stream (e.g. permutations)."""
    seeds = np.asarray(seeds, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return _mix64_array(seeds ^ np.uint64(tag_hash(tag)))


def uniforms(seeds: np.ndarray, steps, slot: int = 0) -> np.ndarray:
    """Open-interval uniforms of shape ``(len(seeds), len(steps))``.

    ``steps`` may be an int (returns shape ``(len(seeds),)``) or a 1-d array.
    """
    if not 0 <= slot < SLOTS:
        raise ValueError(f"slot must be in [0, {SLOTS})")
    seeds = np.asarray(seeds, dtype=np.uint64)
    scalar = np.ndim(steps) == 0
    steps = np.atleast_1d(np.asarray(steps, dtype=np.uint64))
    counters = steps * np.uint64(SLOTS) + np.uint64(slot + 1)
    with np.errstate(over="ignore"):
        z = _mix64_array(seeds[:, None] + counters[None, :] * _U_GOLDEN)
    u = ((z >> _S11).astype(np.float64) + 0.5) * _INV53
    return u[:, 0] if scalar else u


def uniforms_at(seeds: np.ndarray, steps: np.ndarray, slot) -> np.ndarray:
    """Elementwise variant of :func:`uniforms`: ``seeds``, ``steps`` and ``slot`` broadcast."""
    seeds = np.asarray(seeds, dtype=np.uint64)
    steps = np.asarray(steps, dtype=np.uint64)
    slot = np.asarray(slot, dtype=np.uint64)
    if np.any(slot >= SLOTS):
        raise ValueError(f"slot must be in [0, {SLOTS})")
    counters = steps * np.uint64(SLOTS) + slot + np.uint64(1)
    with np.errstate(over="ignore"):
        z = _mix64_array(seeds + counters * _U_GOLDEN)
    return ((z >> _S11).astype(np.float64) + 0.5) * _INV53
