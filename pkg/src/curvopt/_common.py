"""Internal helpers shared by oracles, samplers and drivers.

Not part of the public API.
"""

from __future__ import annotations

import math

import numpy as np

SeedLike = int | np.random.Generator | None


def normalize_generator(seed: SeedLike) -> np.random.Generator:
    """Normalize a seed argument into a `numpy.random.Generator`.

    Accepted forms:
    - None: fresh generator seeded from the OS
    - int: `np.random.default_rng(seed)`
    - Generator: used as-is (shared state, draws advance it)
    """

    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def chunk_slices(count: int, chunk_size: int) -> list[slice]:
    """Fixed-size spans over `range(count)` in index order."""
    if chunk_size <= 0:
        raise ValueError("chunk_size must be positive")
    return [slice(lo, min(lo + chunk_size, count)) for lo in range(0, count, chunk_size)]


def sample_count(n: int, ratio: float) -> int:
    """Batch size for a sampling ratio: max(1, round(ratio * n)), capped at n."""
    return int(min(n, max(1, round(ratio * n))))


def default_eval_every(evaluation_cost: int, batch_size: int, fraction: float = 0.05) -> int:
    """Smallest cadence k with evaluation_cost / (k * 2|S|) < fraction.

    `evaluation_cost` is every propagation one evaluation spends: the
    full-data loss pass plus whatever the error evaluator runs.
    """
    return max(1, math.floor(evaluation_cost / (fraction * 2 * batch_size)) + 1)
