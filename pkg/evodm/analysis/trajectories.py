import logging
import os
from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import click
import numpy as np
import pandas as pd

from evodm.evolution.ancestry import LodEntry, extract_lod
from evodm.evolution.sinks import PopulationStore
from evodm.utils.logging import setup_logging

LOD_FIELDS = ("fitness", "connections")


@dataclass(frozen=True)
class TrajectorySummary:
    generations: Tuple[int, ...]
    mean: np.ndarray
    sd: np.ndarray
    replicates: int


def average_lod_trajectories(lods: Sequence[Sequence[LodEntry]], field: str) -> TrajectorySummary:
    """Per-generation mean and standard deviation of ``field`` across replicate LODs."""
    if field not in LOD_FIELDS:
        raise ValueError(f"field must be one of {LOD_FIELDS}, got {field!r}")
    if not lods:
        raise ValueError("Need at least one LOD")
    lengths = {len(lod) for lod in lods}
    if len(lengths) != 1:
        raise ValueError(f"All LODs must have the same length, got lengths {sorted(lengths)}")

    values = np.asarray([[getattr(entry, field) for entry in lod] for lod in lods], dtype=float)
    return TrajectorySummary(
        generations=tuple(entry.generation for entry in lods[0]),
        mean=values.mean(axis=0),
        sd=values.std(axis=0),
        replicates=len(lods),
    )


def load_lod(run_dir: str, agent_index: int = 0) -> List[LodEntry]:
    return extract_lod(PopulationStore(run_dir).load_ancestry(), agent_index)


def population_dirs(experiment_dir: str) -> List[str]:
    return sorted(
        os.path.join(experiment_dir, name)
        for name in os.listdir(experiment_dir)
        if os.path.exists(os.path.join(experiment_dir, name, "population.json"))
    )


def trajectory_frame(lods_by_condition: Dict[str, List[List[LodEntry]]]) -> pd.DataFrame:
    frames = []
    for condition, lods in sorted(lods_by_condition.items()):
        connections = average_lod_trajectories(lods, "connections")
        fitness = average_lod_trajectories(lods, "fitness")
        frames.append(
            pd.DataFrame(
                {
                    "condition": condition,
                    "generation": connections.generations,
                    "mean_connections": connections.mean,
                    "sd_connections": connections.sd,
                    "mean_fitness": fitness.mean,
                }
            )
        )
    return pd.concat(frames, ignore_index=True)


@click.command()
@click.argument("run_dirs", nargs=-1, type=click.Path(exists=True, file_okay=False))
@click.option("--agent-index", type=int, default=0, help="Final-generation agent whose LOD is traced.")
@click.option("--out", "output_csv", type=str, default="trajectories.csv", help="Output CSV path.")
@click.option("--verbose", is_flag=True, default=False, help="Whether to print verbose output.")
def lod(run_dirs: Tuple[str, ...], agent_index: int, output_csv: str, verbose: bool) -> None:
    """
    Extract lines of descent and average them per condition.

    RUN_DIRS may be population directories or experiment directories holding them.
    """
    setup_logging(verbose)

    populations: List[str] = []
    for run_dir in run_dirs:
        if os.path.exists(os.path.join(run_dir, "population.json")):
            populations.append(run_dir)
        else:
            populations += population_dirs(run_dir)
    if not populations:
        raise click.UsageError("No population directories found")

    lods_by_condition: Dict[str, List[List[LodEntry]]] = defaultdict(list)
    for run_dir in populations:
        info = PopulationStore(run_dir).load_population_info()
        condition: Optional[str] = info.get("condition_label")
        lods_by_condition[condition or "unknown"].append(load_lod(run_dir, agent_index))
    logging.info(f"Extracted {len(populations)} LODs across {len(lods_by_condition)} condition(s)")

    trajectory_frame(lods_by_condition).to_csv(output_csv, index=False, float_format="%.6f")
    print(output_csv)
