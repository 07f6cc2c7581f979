"""Keyed, counter-based random streams.

Every random draw in a run comes from a stream addressed by ``(run_seed, purpose, *indices)``
(for example the generation and agent index). Streams are Philox generators seeded through a
``SeedSequence`` spawn key. Two streams with different keys are independent, and the draws a stream
yields do not depend on the order in which other streams are consumed.
"""

import enum
from typing import Tuple

import numpy as np

_UINT64_MASK = (1 << 64) - 1


class StreamPurpose(enum.IntEnum):
    SEED_GENOME = 1
    FOUNDERS = 2
    EVALUATION = 3
    SELECTION = 4
    MUTATION = 5
    PROBE = 6
    POPULATION_SEED = 7


def _key(purpose: StreamPurpose, indices: Tuple[int, ...]) -> Tuple[int, ...]:
    for i in indices:
        if i < 0:
            raise ValueError(f"Stream indices must be non-negative, got {indices}")
    return (int(purpose), *(int(i) for i in indices))


def stream(run_seed: int, purpose: StreamPurpose, *indices: int) -> np.random.Generator:
    """Return the random stream for ``(run_seed, purpose, *indices)``."""
    seq = np.random.SeedSequence(entropy=int(run_seed) & _UINT64_MASK, spawn_key=_key(purpose, indices))
    return np.random.Generator(np.random.Philox(seq))


def derive_seed(base_seed: int, *indices: int) -> int:
    """Derive a 64-bit seed from a base seed and a tuple of indices (e.g. condition, replicate)."""
    seq = np.random.SeedSequence(
        entropy=int(base_seed) & _UINT64_MASK, spawn_key=_key(StreamPurpose.POPULATION_SEED, indices)
    )
    lo, hi = (int(v) for v in seq.generate_state(2, dtype=np.uint32))
    return (hi << 32) | lo
