from typing import Sequence

import numpy as np


def select_parents(fitnesses: Sequence[int], count: int, rng: np.random.Generator) -> np.ndarray:
    """Roulette-wheel selection of ``count`` parent indices.

    Each index is drawn independently with probability ``fitness_i / sum(fitness)``. Draws are
    integers in ``[0, total)`` mapped through the integer cumulative sums, so the selection
    probabilities are exact ratios. A zero total falls back to uniform selection.
    """
    f = np.asarray(fitnesses, dtype=np.int64)
    if count < 1:
        raise ValueError(f"count must be at least 1, got {count}")
    if f.size == 0:
        raise ValueError("fitnesses must not be empty")
    if (f < 0).any():
        raise ValueError("fitnesses must be non-negative")

    total = int(f.sum())
    if total == 0:
        return rng.integers(0, f.size, size=count)
    draws = rng.integers(0, total, size=count)
    return np.searchsorted(np.cumsum(f), draws, side="right")
