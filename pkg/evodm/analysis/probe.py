import logging
import os
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import click
import numpy as np

from evodm.brain.base import connection_count, decode
from evodm.environment.base import Condition, TrialRecord
from evodm.environment.records import write_records
from evodm.environment.trials import evaluate_agent
from evodm.evolution.config import PopulationConfig
from evodm.evolution.sinks import PopulationStore
from evodm.genome.base import Genome
from evodm.harness.manifest import register_outputs
from evodm.utils.logging import setup_logging
from evodm.utils.python import atomic_write_json
from evodm.utils.random import StreamPurpose, stream

# Decisions counted as "prompt" when made within this many steps after the non-decision time
PROMPT_WINDOW = 20


@dataclass(frozen=True)
class ProbeResult:
    generation: Optional[int]
    condition: Condition
    per_agent_accuracy: Tuple[float, ...]
    pooled_accuracy: float
    connections: Tuple[int, ...]
    nodes_used: Tuple[int, ...]
    records: Optional[Tuple[TrialRecord, ...]]

    @property
    def decided_records(self) -> List[TrialRecord]:
        return [r for r in self.records or () if r.decided]


def accuracy_summary(records: Sequence[TrialRecord], nondecision_time: int) -> Dict[str, Any]:
    """Accuracy and decision-timing summary of a set of trials."""
    n = len(records)
    decided = [r for r in records if r.decided]
    correct = sum(r.score for r in records)
    lags = np.asarray([r.decision_step - nondecision_time for r in decided if r.decision_step is not None])
    return {
        "trials": n,
        "decided": len(decided),
        "decided_rate": len(decided) / n if n else 0.0,
        "accuracy": correct / n if n else 0.0,
        "accuracy_when_decided": correct / len(decided) if decided else None,
        "mean_steps_after_nondecision": float(lags.mean()) if lags.size else None,
        "median_steps_after_nondecision": float(np.median(lags)) if lags.size else None,
        f"within_{PROMPT_WINDOW}_steps_rate": float(np.mean(lags < PROMPT_WINDOW)) if lags.size else None,
    }


def probe_generation(
    genomes: Sequence[Genome],
    condition: Condition,
    rng: np.random.Generator,
    keep_records: bool = True,
    generation: Optional[int] = None,
) -> ProbeResult:
    """Re-evaluate a population snapshot, keeping every trial log when ``keep_records`` is set.

    Agents are evaluated in index order from the single ``rng``, so accuracies do not depend on
    whether records are kept.
    """
    accuracies: List[float] = []
    connections: List[int] = []
    nodes_used: List[int] = []
    records: List[TrialRecord] = []
    total_correct = 0
    for index, genome in enumerate(genomes):
        brain = decode(genome)
        evaluation = evaluate_agent(brain, condition, rng, keep_records=keep_records, agent_index=index)
        accuracies.append(evaluation.fitness / condition.trials_per_agent)
        connections.append(connection_count(brain))
        nodes_used.append(len(brain.nodes_used()))
        total_correct += evaluation.fitness
        if evaluation.records is not None:
            records.extend(evaluation.records)

    n_trials = condition.trials_per_agent * len(genomes)
    return ProbeResult(
        generation=generation,
        condition=condition,
        per_agent_accuracy=tuple(accuracies),
        pooled_accuracy=total_correct / n_trials if n_trials else 0.0,
        connections=tuple(connections),
        nodes_used=tuple(nodes_used),
        records=tuple(records) if keep_records else None,
    )


def probe_population(store: PopulationStore, generation: Optional[int] = None) -> Tuple[ProbeResult, str]:
    """Probe a stored snapshot and write ``probe_<g>/records.jsonl`` and ``summary.json``."""
    info = store.load_population_info()
    config = PopulationConfig.from_dict(info["config"])
    generation = config.probe_generation if generation is None else generation
    genomes = store.load_snapshot(generation)

    result = probe_generation(
        genomes, config.condition, stream(config.run_seed, StreamPurpose.PROBE, generation), generation=generation
    )
    out_dir = store.probe_dir(generation)
    os.makedirs(out_dir, exist_ok=True)
    write_records(os.path.join(out_dir, "records.jsonl"), result.records or ())
    summary = {
        "population_id": store.population_id,
        "generation": generation,
        "condition": config.condition.label,
        "pooled_accuracy": result.pooled_accuracy,
        "per_agent_accuracy": list(result.per_agent_accuracy),
        "mean_connections": float(np.mean(result.connections)) if result.connections else 0.0,
        "mean_nodes_used": float(np.mean(result.nodes_used)) if result.nodes_used else 0.0,
        **accuracy_summary(result.records or (), config.condition.nondecision_time),
    }
    atomic_write_json(os.path.join(out_dir, "summary.json"), summary)
    return result, out_dir


@click.command()
@click.option(
    "--run", "run_dir", type=click.Path(exists=True, file_okay=False), required=True, help="Population directory to probe."
)
@click.option("--generation", type=int, default=None, help="Snapshot generation (defaults to generations - 30).")
@click.option("--verbose", is_flag=True, default=False, help="Whether to print verbose output.")
def probe(run_dir: str, generation: Optional[int], verbose: bool) -> None:
    """
    Re-evaluate a snapshot generation with full trial logging.
    """
    setup_logging(verbose)

    store = PopulationStore(run_dir, population_id=os.path.basename(os.path.normpath(run_dir)))
    result, out_dir = probe_population(store, generation)
    register_outputs(run_dir, [os.path.join(out_dir, name) for name in ("records.jsonl", "summary.json")])
    logging.info(
        f"Probed generation {result.generation} of {run_dir}: pooled accuracy {result.pooled_accuracy:.3f}, "
        f"{len(result.decided_records)} decided trials"
    )
    print(out_dir)
