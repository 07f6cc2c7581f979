from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional, Sequence

import numpy as np

STATS_COLUMNS = [
    "population_id",
    "generation",
    "mean_fitness",
    "max_fitness",
    "mean_connections",
    "mean_decision_step",
]
# Written next to stats.csv so that its header stays fixed
EXTRA_STATS_COLUMNS = ["population_id", "generation", "accuracy_when_decided", "mean_genome_length"]


@dataclass(frozen=True)
class GenerationStats:
    generation: int
    mean_fitness: float
    max_fitness: int
    mean_connections: float
    mean_decision_step: Optional[float]
    accuracy_when_decided: Optional[float] = None
    mean_genome_length: Optional[float] = None

    def to_row(self, population_id: str) -> Dict[str, Any]:
        return {"population_id": population_id, **asdict(self)}


def summarize_generation(
    generation: int,
    fitnesses: Sequence[int],
    connections: Sequence[int],
    decided: Sequence[int],
    decision_step_sums: Sequence[int],
    genome_lengths: Sequence[int],
) -> GenerationStats:
    fit = np.asarray(fitnesses, dtype=np.int64)
    n_decided = int(np.sum(decided))
    return GenerationStats(
        generation=generation,
        mean_fitness=float(fit.mean()),
        max_fitness=int(fit.max()),
        mean_connections=float(np.mean(connections)),
        # Pooled over every decided trial of the generation
        mean_decision_step=float(np.sum(decision_step_sums)) / n_decided if n_decided else None,
        accuracy_when_decided=float(fit.sum()) / n_decided if n_decided else None,
        mean_genome_length=float(np.mean(genome_lengths)),
    )
