from dataclasses import asdict, dataclass, field
from typing import Any, Dict, FrozenSet, Tuple

from evodm.environment.base import Condition
from evodm.genome.mutations import MutationRates
from evodm.utils.python import compute_config_hash

# Calibrated so that a random seed genome carries roughly four genes, i.e. 20-30 connections
DEFAULT_SEED_GENOME_LENGTH = 4096
# Seed genomes are redrawn until their brain falls in this connection band
DEFAULT_SEED_CONNECTION_RANGE = (20, 30)
# Generations between the probe generation and the end of a run
PROBE_OFFSET = 30


def calibrated_rates() -> MutationRates:
    """Default mutation rates with duplication and deletion applied once per replication.

    Per-site indels at these rates grow genomes by about a quarter of their length per generation.
    """
    return MutationRates(indel_scope="genome")


@dataclass(frozen=True)
class PopulationConfig:
    condition: Condition
    rates: MutationRates = field(default_factory=calibrated_rates)
    population_size: int = 100
    generations: int = 10000
    seed_genome_length: int = DEFAULT_SEED_GENOME_LENGTH
    seed_connection_range: Tuple[int, int] = DEFAULT_SEED_CONNECTION_RANGE
    run_seed: int = 0
    snapshot_interval: int = 1000
    checkpoint_interval: int = 1
    # Give every agent of a generation the same block of trials
    common_trials: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "seed_connection_range", tuple(int(x) for x in self.seed_connection_range))
        low, high = self.seed_connection_range
        if not 0 <= low <= high:
            raise ValueError(f"Invalid seed_connection_range {self.seed_connection_range}")
        if self.population_size < 2:  # noqa: PLR2004
            raise ValueError(f"population_size must be at least 2, got {self.population_size}")
        if self.generations < 1:
            raise ValueError(f"generations must be at least 1, got {self.generations}")
        if self.snapshot_interval < 1 or self.checkpoint_interval < 1:
            raise ValueError("snapshot_interval and checkpoint_interval must be positive")

    @property
    def probe_generation(self) -> int:
        return max(self.generations - PROBE_OFFSET, 0)

    @property
    def snapshot_generations(self) -> FrozenSet[int]:
        regular = set(range(0, self.generations + 1, self.snapshot_interval))
        return frozenset(regular | {self.probe_generation, self.generations})

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "PopulationConfig":
        data = dict(data)
        condition = Condition(**data.pop("condition"))
        rates = MutationRates(**data.pop("rates"))
        return cls(condition=condition, rates=rates, **data)

    @property
    def config_hash(self) -> str:
        return compute_config_hash(self.to_dict())
