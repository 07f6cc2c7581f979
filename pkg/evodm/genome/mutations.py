from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from evodm.genome.base import MAX_GENOME_LENGTH, MIN_GENOME_LENGTH, Genome

INDEL_SCOPES = ("site", "genome")


@dataclass(frozen=True)
class MutationRates:
    """Mutation probabilities applied at every replication.

    ``point``, ``duplication`` and ``deletion`` are per-nucleotide probabilities. With
    ``indel_scope="genome"`` the duplication and deletion probabilities instead apply once per
    replication, so at most one event of each kind happens per copy.
    """

    point: float = 0.00005
    duplication: float = 0.002
    deletion: float = 0.001
    dup_del_segment_len: int = 256
    indel_scope: str = "site"
    min_len: int = MIN_GENOME_LENGTH
    max_len: int = MAX_GENOME_LENGTH

    def __post_init__(self) -> None:
        for name in ("point", "duplication", "deletion"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"Mutation rate {name} must be in [0, 1], got {value}")
        if self.dup_del_segment_len < 1:
            raise ValueError(f"dup_del_segment_len must be positive, got {self.dup_del_segment_len}")
        if self.indel_scope not in INDEL_SCOPES:
            raise ValueError(f"indel_scope must be one of {INDEL_SCOPES}, got {self.indel_scope!r}")
        if not 0 < self.min_len <= self.max_len:
            raise ValueError(f"Invalid length bounds [{self.min_len}, {self.max_len}]")

    @classmethod
    def zero(cls) -> "MutationRates":
        return cls(point=0.0, duplication=0.0, deletion=0.0)


@dataclass(frozen=True)
class MutationCounts:
    point: int = 0
    duplication: int = 0
    deletion: int = 0
    # Indel events that were drawn but dropped because they would break the length bounds
    skipped: int = 0


def _indel_counts(length: int, rates: MutationRates, rng: np.random.Generator) -> Tuple[int, int]:
    if rates.indel_scope == "site":
        return int(rng.binomial(length, rates.duplication)), int(rng.binomial(length, rates.deletion))
    return int(rng.random() < rates.duplication), int(rng.random() < rates.deletion)


def _duplicate(seq: np.ndarray, site: int, seg: int) -> np.ndarray:
    n = seq.size
    segment = np.take(seq, np.arange(site, site + seg), mode="wrap")
    # Inserting at the (circular) end of the copied segment places the copy right after it
    insert_at = (site + seg) % n
    return np.concatenate([seq[:insert_at], segment, seq[insert_at:]])


def _delete(seq: np.ndarray, site: int, seg: int) -> np.ndarray:
    n = seq.size
    return np.delete(seq, np.arange(site, site + seg) % n)


def mutate_with_counts(
    parent: Genome, rates: MutationRates, rng: np.random.Generator
) -> Tuple[Genome, MutationCounts]:
    """Copy ``parent`` with point, duplication and deletion mutations and tally the events."""
    seq = parent.nucleotides.copy()
    n = seq.size

    n_point = int(rng.binomial(n, rates.point)) if n and rates.point > 0 else 0
    if n_point:
        sites = rng.choice(n, size=n_point, replace=False)
        seq[sites] = rng.integers(1, 5, size=n_point, dtype=np.uint8)

    n_dup, n_del = _indel_counts(n, rates, rng) if n else (0, 0)
    events: List[int] = [1] * n_dup + [0] * n_del
    skipped = 0
    if events:
        seg = rates.dup_del_segment_len
        for is_dup in rng.permutation(np.asarray(events, dtype=np.int8)):
            length = seq.size
            site = int(rng.integers(length))
            if is_dup:
                if length + seg > rates.max_len:
                    skipped += 1
                    continue
                seq = _duplicate(seq, site, seg)
            else:
                if length - seg < rates.min_len or seg >= length:
                    skipped += 1
                    continue
                seq = _delete(seq, site, seg)

    return Genome(seq), MutationCounts(point=n_point, duplication=n_dup, deletion=n_del, skipped=skipped)


def mutate(parent: Genome, rates: MutationRates, rng: np.random.Generator) -> Genome:
    child, _ = mutate_with_counts(parent, rates, rng)
    return child
