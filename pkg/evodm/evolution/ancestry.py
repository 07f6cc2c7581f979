from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np
import pandas as pd

ANCESTRY_COLUMNS = ["generation", "agent_index", "parent_index", "fitness", "connections"]


class AncestryIntegrityError(RuntimeError):
    pass


@dataclass(frozen=True)
class LodEntry:
    """One ancestor on a line of descent."""

    generation: int
    fitness: int
    connections: int


@dataclass
class AncestryTable:
    """Per-generation parent links plus the fitness and connection count of every agent.

    Parent links for a generation are known as soon as its parents are selected, while fitness
    and connections are filled in when the generation itself is evaluated. Generation 0 has no
    parents (stored as -1).
    """

    parents: Dict[int, np.ndarray] = field(default_factory=dict)
    fitness: Dict[int, np.ndarray] = field(default_factory=dict)
    connections: Dict[int, np.ndarray] = field(default_factory=dict)

    def set_parents(self, generation: int, parents: np.ndarray) -> None:
        self.parents[generation] = np.asarray(parents, dtype=np.int64)

    def set_evaluation(self, generation: int, fitness: np.ndarray, connections: np.ndarray) -> None:
        self.fitness[generation] = np.asarray(fitness, dtype=np.int64)
        self.connections[generation] = np.asarray(connections, dtype=np.int64)

    @property
    def last_generation(self) -> int:
        if not self.fitness:
            raise AncestryIntegrityError("Ancestry table holds no evaluated generation")
        return max(self.fitness)

    @property
    def depth(self) -> int:
        # Number of parent-link levels
        return len([g for g in self.parents if g > 0])

    def rows(self, generation: int) -> pd.DataFrame:
        n = self.fitness[generation].size
        return pd.DataFrame(
            {
                "generation": np.full(n, generation, dtype=np.int64),
                "agent_index": np.arange(n, dtype=np.int64),
                "parent_index": self.parents.get(generation, np.full(n, -1, dtype=np.int64)),
                "fitness": self.fitness[generation],
                "connections": self.connections[generation],
            },
            columns=ANCESTRY_COLUMNS,
        )

    def to_frame(self) -> pd.DataFrame:
        if not self.fitness:
            return pd.DataFrame(columns=ANCESTRY_COLUMNS)
        return pd.concat([self.rows(g) for g in sorted(self.fitness)], ignore_index=True)

    @classmethod
    def from_frame(cls, frame: pd.DataFrame) -> "AncestryTable":
        table = cls()
        for generation, rows in frame.sort_values(["generation", "agent_index"]).groupby("generation"):
            g = int(generation)
            if not np.array_equal(rows["agent_index"].to_numpy(), np.arange(len(rows))):
                raise AncestryIntegrityError(f"Generation {g} has missing or duplicated agent rows")
            table.set_parents(g, rows["parent_index"].to_numpy())
            table.set_evaluation(g, rows["fitness"].to_numpy(), rows["connections"].to_numpy())
        return table

    @classmethod
    def from_csv(cls, path: str) -> "AncestryTable":
        return cls.from_frame(pd.read_csv(path))


def extract_lod(ancestry: AncestryTable, final_index: int) -> List[LodEntry]:
    """Walk parent links from agent ``final_index`` of the last generation back to generation 0.

    The returned list runs from generation 0 to the last generation.
    """
    last = ancestry.last_generation
    if not 0 <= final_index < ancestry.fitness[last].size:
        raise ValueError(f"final_index {final_index} is not a valid agent of generation {last}")

    chain: List[LodEntry] = []
    index = final_index
    for g in range(last, -1, -1):
        if g not in ancestry.fitness:
            raise AncestryIntegrityError(f"Generation {g} is missing from the ancestry table")
        if not 0 <= index < ancestry.fitness[g].size:
            raise AncestryIntegrityError(f"Agent {index} does not exist in generation {g}")
        chain.append(
            LodEntry(
                generation=g,
                fitness=int(ancestry.fitness[g][index]),
                connections=int(ancestry.connections[g][index]),
            )
        )
        if g == 0:
            break
        if g not in ancestry.parents:
            raise AncestryIntegrityError(f"Generation {g} has no parent links")
        index = int(ancestry.parents[g][index])
        if index < 0:
            raise AncestryIntegrityError(f"Missing parent link for an agent of generation {g}")
    chain.reverse()
    return chain
