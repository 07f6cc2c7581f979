"""Where a population run sends its outputs.

``EvolutionSink`` is the interface the evolution loop writes to. ``MemorySink`` keeps everything
in memory (used by tests and the python API), and ``PopulationStore`` owns one population
directory: the stats and ancestry CSV streams, sparse genome snapshots and the checkpoint used to
resume an interrupted run.
"""

import io
import json
import logging
import os
import zipfile
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from evodm.evolution.ancestry import ANCESTRY_COLUMNS, AncestryTable
from evodm.evolution.stats import EXTRA_STATS_COLUMNS, STATS_COLUMNS, GenerationStats
from evodm.genome.base import Genome
from evodm.utils.python import atomic_write_bytes, atomic_write_json


class CheckpointMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class Checkpoint:
    """State needed to continue a run at ``next_generation``.

    Random streams are keyed by generation, so the generation index is the whole rng cursor.
    """

    next_generation: int
    genomes: Tuple[Genome, ...]
    parents: np.ndarray
    config_hash: str
    finished: bool = False


def pack_genomes(genomes: Sequence[Genome]) -> Tuple[np.ndarray, np.ndarray]:
    lengths = np.asarray([len(g) for g in genomes], dtype=np.int64)
    offsets = np.concatenate([[0], np.cumsum(lengths)])
    nucleotides = (
        np.concatenate([g.nucleotides for g in genomes]) if len(genomes) else np.zeros(0, dtype=np.uint8)
    )
    return nucleotides, offsets


def unpack_genomes(nucleotides: np.ndarray, offsets: np.ndarray) -> List[Genome]:
    return [Genome(nucleotides[offsets[i] : offsets[i + 1]]) for i in range(len(offsets) - 1)]


def _npz_bytes(**arrays: np.ndarray) -> bytes:
    # Same layout as np.savez_compressed, but with fixed entry timestamps so equal arrays give equal bytes
    buffer = io.BytesIO()
    with zipfile.ZipFile(buffer, "w", compression=zipfile.ZIP_DEFLATED) as zf:
        for name, array in arrays.items():
            info = zipfile.ZipInfo(f"{name}.npy", date_time=(1980, 1, 1, 0, 0, 0))
            info.compress_type = zipfile.ZIP_DEFLATED
            with zf.open(info, "w", force_zip64=True) as f:
                np.lib.format.write_array(f, np.asanyarray(array), allow_pickle=False)
    return buffer.getvalue()


class EvolutionSink(ABC):
    @abstractmethod
    def write_stats(self, stats: GenerationStats) -> None:
        raise NotImplementedError()

    @abstractmethod
    def write_ancestry(self, ancestry: AncestryTable, generation: int) -> None:
        raise NotImplementedError()

    def write_snapshot(self, generation: int, genomes: Sequence[Genome]) -> None:  # noqa: B027
        pass

    def write_checkpoint(self, checkpoint: Checkpoint) -> None:  # noqa: B027
        pass

    def flush(self) -> None:  # noqa: B027
        pass


class CompositeSink(EvolutionSink):
    def __init__(self, sinks: Sequence[EvolutionSink]):
        self._sinks = list(sinks)

    def write_stats(self, stats: GenerationStats) -> None:
        for sink in self._sinks:
            sink.write_stats(stats)

    def write_ancestry(self, ancestry: AncestryTable, generation: int) -> None:
        for sink in self._sinks:
            sink.write_ancestry(ancestry, generation)

    def write_snapshot(self, generation: int, genomes: Sequence[Genome]) -> None:
        for sink in self._sinks:
            sink.write_snapshot(generation, genomes)

    def write_checkpoint(self, checkpoint: Checkpoint) -> None:
        for sink in self._sinks:
            sink.write_checkpoint(checkpoint)

    def flush(self) -> None:
        for sink in self._sinks:
            sink.flush()


class MemorySink(EvolutionSink):
    def __init__(self) -> None:
        self.stats: List[GenerationStats] = []
        self.ancestry_generations: List[int] = []
        self.snapshots: Dict[int, Tuple[Genome, ...]] = {}
        self.checkpoints: List[Checkpoint] = []

    def write_stats(self, stats: GenerationStats) -> None:
        self.stats.append(stats)

    def write_ancestry(self, ancestry: AncestryTable, generation: int) -> None:
        self.ancestry_generations.append(generation)

    def write_snapshot(self, generation: int, genomes: Sequence[Genome]) -> None:
        self.snapshots[generation] = tuple(genomes)

    def write_checkpoint(self, checkpoint: Checkpoint) -> None:
        self.checkpoints.append(checkpoint)


def _truncate_csv(path: str, keep_below_generation: int, generation_field: int) -> None:
    # Drop every row at or beyond the given generation, keeping the kept bytes untouched
    if not os.path.exists(path):
        return
    with open(path) as f:
        lines = f.readlines()
    if not lines:
        return
    kept = [lines[0]] + [
        line for line in lines[1:] if line.strip() and int(line.split(",")[generation_field]) < keep_below_generation
    ]
    atomic_write_bytes(path, "".join(kept).encode("utf-8"))


class PopulationStore(EvolutionSink):
    """File-backed sink for one population directory."""

    def __init__(self, root: str, population_id: str = "p000_r000"):
        self.root = root
        self.population_id = population_id

    @property
    def stats_path(self) -> str:
        return os.path.join(self.root, "stats.csv")

    @property
    def extra_stats_path(self) -> str:
        return os.path.join(self.root, "stats_extra.csv")

    @property
    def ancestry_path(self) -> str:
        return os.path.join(self.root, "ancestry.csv")

    @property
    def snapshot_dir(self) -> str:
        return os.path.join(self.root, "snapshots")

    @property
    def checkpoint_dir(self) -> str:
        return os.path.join(self.root, "checkpoint")

    @property
    def config_path(self) -> str:
        return os.path.join(self.root, "population.json")

    def snapshot_path(self, generation: int) -> str:
        return os.path.join(self.snapshot_dir, f"gen_{generation:06d}.npz")

    def probe_dir(self, generation: int) -> str:
        return os.path.join(self.root, f"probe_{generation}")

    # Writing

    def write_population_info(self, info: Dict[str, Any]) -> None:
        atomic_write_json(self.config_path, {"population_id": self.population_id, **info})

    def _append_csv(self, path: str, frame: pd.DataFrame) -> None:
        os.makedirs(self.root, exist_ok=True)
        frame.to_csv(path, mode="a", header=not os.path.exists(path), index=False, float_format="%.6f")

    def write_stats(self, stats: GenerationStats) -> None:
        row = stats.to_row(self.population_id)
        self._append_csv(self.stats_path, pd.DataFrame([row], columns=STATS_COLUMNS))
        self._append_csv(self.extra_stats_path, pd.DataFrame([row], columns=EXTRA_STATS_COLUMNS))

    def write_ancestry(self, ancestry: AncestryTable, generation: int) -> None:
        self._append_csv(self.ancestry_path, ancestry.rows(generation))

    def write_snapshot(self, generation: int, genomes: Sequence[Genome]) -> None:
        os.makedirs(self.snapshot_dir, exist_ok=True)
        nucleotides, offsets = pack_genomes(genomes)
        atomic_write_bytes(self.snapshot_path(generation), _npz_bytes(nucleotides=nucleotides, offsets=offsets))

    def write_checkpoint(self, checkpoint: Checkpoint) -> None:
        os.makedirs(self.checkpoint_dir, exist_ok=True)
        nucleotides, offsets = pack_genomes(checkpoint.genomes)
        # Genomes first, then the state file that points at them
        atomic_write_bytes(
            os.path.join(self.checkpoint_dir, "genomes.npz"),
            _npz_bytes(nucleotides=nucleotides, offsets=offsets, parents=np.asarray(checkpoint.parents)),
        )
        atomic_write_json(
            os.path.join(self.checkpoint_dir, "state.json"),
            {
                "next_generation": checkpoint.next_generation,
                "config_hash": checkpoint.config_hash,
                "finished": checkpoint.finished,
                "rng_cursor": {"generation": checkpoint.next_generation},
            },
        )

    # Reading

    def load_snapshot(self, generation: int) -> List[Genome]:
        path = self.snapshot_path(generation)
        if not os.path.exists(path):
            raise FileNotFoundError(f"No genome snapshot for generation {generation} in {self.root}")
        with np.load(path) as data:
            return unpack_genomes(data["nucleotides"], data["offsets"])

    def snapshot_generations(self) -> List[int]:
        if not os.path.isdir(self.snapshot_dir):
            return []
        names = os.listdir(self.snapshot_dir)
        return sorted(int(name[4:-4]) for name in names if name.startswith("gen_") and name.endswith(".npz"))

    def load_checkpoint(self, config_hash: str) -> Optional[Checkpoint]:
        state_path = os.path.join(self.checkpoint_dir, "state.json")
        if not os.path.exists(state_path):
            return None
        with open(state_path) as f:
            state = json.load(f)
        if state["config_hash"] != config_hash:
            raise CheckpointMismatchError(
                f"Checkpoint in {self.checkpoint_dir} was written by a different config "
                f"({state['config_hash']} != {config_hash}); refusing to resume"
            )
        with np.load(os.path.join(self.checkpoint_dir, "genomes.npz")) as data:
            genomes = unpack_genomes(data["nucleotides"], data["offsets"])
            parents = data["parents"].copy()
        return Checkpoint(
            next_generation=int(state["next_generation"]),
            genomes=tuple(genomes),
            parents=parents,
            config_hash=state["config_hash"],
            finished=bool(state.get("finished", False)),
        )

    def load_population_info(self) -> Dict[str, Any]:
        if not os.path.exists(self.config_path):
            raise FileNotFoundError(f"{self.root} is not a population directory (no population.json)")
        with open(self.config_path) as f:
            return dict(json.load(f))

    def load_ancestry(self) -> AncestryTable:
        if not os.path.exists(self.ancestry_path):
            return AncestryTable()
        return AncestryTable.from_csv(self.ancestry_path)

    def load_stats(self) -> pd.DataFrame:
        return pd.read_csv(self.stats_path)

    def load_extra_stats(self) -> pd.DataFrame:
        return pd.read_csv(self.extra_stats_path)

    def rewind(self, next_generation: int) -> None:
        """Drop any output written for generations at or after ``next_generation``."""
        logging.debug(f"Rewinding {self.root} to generation {next_generation}")
        _truncate_csv(self.stats_path, next_generation, STATS_COLUMNS.index("generation"))
        _truncate_csv(self.extra_stats_path, next_generation, EXTRA_STATS_COLUMNS.index("generation"))
        _truncate_csv(self.ancestry_path, next_generation, ANCESTRY_COLUMNS.index("generation"))
        for generation in self.snapshot_generations():
            if generation >= next_generation:
                os.remove(self.snapshot_path(generation))

    def written_files(self) -> List[str]:
        files = [self.config_path, self.stats_path, self.extra_stats_path, self.ancestry_path]
        files += [self.snapshot_path(g) for g in self.snapshot_generations()]
        files += [os.path.join(self.checkpoint_dir, name) for name in ("genomes.npz", "state.json")]
        return [f for f in files if os.path.exists(f)]
