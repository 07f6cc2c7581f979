from dataclasses import dataclass
from typing import Iterable, List, Sequence, Union

import numpy as np

MIN_GENOME_LENGTH = 2000
MAX_GENOME_LENGTH = 200000
# Start codon: '42' followed by '213', read as one contiguous sequence
START_CODON = (4, 2, 2, 1, 3)
NUCLEOTIDES = (1, 2, 3, 4)


@dataclass(frozen=True, eq=False)
class Genome:
    """A circular sequence of nucleotides, each in {1, 2, 3, 4}.

    The backing array is a read-only ``uint8`` copy, so a ``Genome`` can be shared freely
    between threads and processes. Length bounds are enforced by the operators that create
    genomes (seeding and mutation), not here, so short hand-crafted genomes can be decoded.
    """

    nucleotides: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.nucleotides, dtype=np.uint8, copy=True).reshape(-1)
        if arr.size and (arr.min() < 1 or arr.max() > 4):  # noqa: PLR2004
            raise ValueError("Genome nucleotides must all be in {1, 2, 3, 4}")
        arr.setflags(write=False)
        object.__setattr__(self, "nucleotides", arr)

    def __len__(self) -> int:
        return int(self.nucleotides.size)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Genome):
            return NotImplemented
        return bool(np.array_equal(self.nucleotides, other.nucleotides))

    def __hash__(self) -> int:
        return hash(self.nucleotides.tobytes())

    @classmethod
    def from_sequence(cls, values: Union[Sequence[int], Iterable[int]]) -> "Genome":
        return cls(np.fromiter((int(v) for v in values), dtype=np.int64))

    @classmethod
    def from_string(cls, text: str) -> "Genome":
        text = text.strip()
        if any(c not in "1234" for c in text):
            raise ValueError("Genome strings may only contain the digits 1-4")
        if not text:
            return cls(np.zeros(0, dtype=np.uint8))
        return cls(np.frombuffer(text.encode("ascii"), dtype=np.uint8) - ord("0"))

    def to_string(self) -> str:
        return (self.nucleotides + ord("0")).tobytes().decode("ascii")

    def circular_take(self, start: int, count: int) -> np.ndarray:
        """Read ``count`` nucleotides starting at ``start``, wrapping around the end."""
        return np.take(self.nucleotides, np.arange(start, start + count), mode="wrap")


def random_seed_genome(length: int, rng: np.random.Generator) -> Genome:
    """Draw a genome with nucleotides independent and uniform over {1, 2, 3, 4}."""
    if not MIN_GENOME_LENGTH <= length <= MAX_GENOME_LENGTH:
        raise ValueError(
            f"Seed genome length must be within [{MIN_GENOME_LENGTH}, {MAX_GENOME_LENGTH}], got {length}"
        )
    return Genome(rng.integers(1, 5, size=int(length), dtype=np.uint8))


def find_gene_starts(genome: Genome) -> List[int]:
    """Return every position at which the start codon begins, scanning the genome circularly."""
    n = len(genome)
    if n == 0:
        return []
    k = len(START_CODON)
    extended = genome.circular_take(0, n + k - 1)
    windows = np.lib.stride_tricks.sliding_window_view(extended, k)
    hits = np.all(windows == np.asarray(START_CODON, dtype=np.uint8), axis=1)
    return [int(i) for i in np.flatnonzero(hits)]
