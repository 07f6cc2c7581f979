import logging
import os
import traceback
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

import click
import tqdm

from evodm.analysis.probe import probe_population
from evodm.environment.base import Condition
from evodm.evolution.config import PopulationConfig
from evodm.evolution.population import run_evolution
from evodm.evolution.sinks import PopulationStore
from evodm.harness.config import ExperimentConfig, available_profiles, load_experiment_config
from evodm.harness.manifest import RunManifest
from evodm.utils.logging import setup_logging
from evodm.utils.python import atomic_write_bytes
from evodm.utils.random import derive_seed


@dataclass(frozen=True)
class GridEntry:
    condition: Condition
    condition_index: int
    replicate: int
    seed: int

    @property
    def population_id(self) -> str:
        return f"p{self.condition_index:03d}_r{self.replicate:03d}"


def expand_grid(config: ExperimentConfig) -> List[GridEntry]:
    """Cross the difficulty and non-decision grids and replicate every condition.

    Conditions are ordered difficulty first, then non-decision time, then replicate, and every
    population gets a seed derived from ``(base_seed, condition_index, replicate)``.
    """
    if not config.difficulty_grid or not config.nondecision_grid:
        raise ValueError("Experiment grid is empty")
    entries = []
    condition_index = 0
    for target in config.difficulty_grid:
        for ndt in config.nondecision_grid:
            condition = Condition(
                target, ndt, max_steps=config.max_steps, trials_per_agent=config.trials_per_agent
            )
            for replicate in range(config.replicates):
                entries.append(
                    GridEntry(
                        condition=condition,
                        condition_index=condition_index,
                        replicate=replicate,
                        seed=derive_seed(config.base_seed, condition_index, replicate),
                    )
                )
            condition_index += 1
    if len({e.seed for e in entries}) != len(entries):
        raise RuntimeError("Derived population seeds collide; choose another base seed")
    return entries


def population_config(config: ExperimentConfig, entry: GridEntry) -> PopulationConfig:
    return PopulationConfig(
        condition=entry.condition,
        rates=config.rates,
        population_size=config.population_size,
        generations=config.generations,
        seed_genome_length=config.seed_genome_length,
        seed_connection_range=config.seed_connection_range,
        run_seed=entry.seed,
        snapshot_interval=config.snapshot_interval,
        checkpoint_interval=config.checkpoint_interval,
        common_trials=config.common_trials,
    )


def run_population(
    config: ExperimentConfig, entry: GridEntry, experiment_dir: str, threads: int = 1
) -> Tuple[str, List[str]]:
    """Evolve (or resume) one population and return its id and written files."""
    pop_config = population_config(config, entry)
    store = PopulationStore(os.path.join(experiment_dir, entry.population_id), population_id=entry.population_id)
    store.write_population_info(
        {
            "condition_label": entry.condition.label,
            "condition_index": entry.condition_index,
            "replicate": entry.replicate,
            "seed": entry.seed,
            "config_hash": pop_config.config_hash,
            "config": pop_config.to_dict(),
        }
    )
    run_evolution(pop_config, sinks=[store], threads=threads)

    outputs = store.written_files()
    if config.probe_after_run:
        _, probe_dir = probe_population(store)
        outputs += [os.path.join(probe_dir, name) for name in ("records.jsonl", "summary.json")]
    return entry.population_id, outputs


def _run_population_job(
    config_data: Dict[str, Any], entry: GridEntry, experiment_dir: str, verbose: bool = False
) -> Tuple[str, Optional[List[str]], Optional[str]]:
    # Runs in a worker process; failures are returned rather than raised so the pool keeps going
    setup_logging(verbose)
    try:
        pid, outputs = run_population(ExperimentConfig.from_dict(config_data), entry, experiment_dir)
        return pid, outputs, None
    except Exception:
        return entry.population_id, None, traceback.format_exc()


def _check_experiment_dir(config: ExperimentConfig, experiment_dir: str, manifest: RunManifest) -> None:
    hashes = manifest.config_hashes()
    if hashes and hashes[-1] != config.config_hash:
        raise click.UsageError(
            f"{experiment_dir} holds an experiment with a different config ({hashes[-1]} != {config.config_hash})"
        )


def run_experiment(config: ExperimentConfig, threads: Optional[int] = None, verbose: bool = False) -> int:
    """Run every population of the grid that is not done yet.

    Returns 0 when every population finished and 1 when any of them failed.
    """
    experiment_dir = config.resolved_output_dir()
    os.makedirs(experiment_dir, exist_ok=True)
    manifest = RunManifest(experiment_dir)
    _check_experiment_dir(config, experiment_dir, manifest)

    atomic_write_bytes(os.path.join(experiment_dir, "config.yaml"), config.to_yaml().encode("utf-8"))
    manifest.start(config.config_hash)

    entries = expand_grid(config)
    known = manifest.populations()
    todo = [e for e in entries if known.get(e.population_id) is None or known[e.population_id].status != "done"]
    logging.info(f"{len(entries)} populations in the grid, {len(entries) - len(todo)} already done")
    for entry in todo:
        if entry.population_id not in known:
            manifest.set_status(entry.population_id, "pending", seed=entry.seed, condition=entry.condition.label)

    workers = min(threads or config.parallelism, max(len(todo), 1))
    failed = 0
    with ProcessPoolExecutor(max_workers=workers) as executor:
        futures = {}
        for entry in todo:
            manifest.set_status(entry.population_id, "running")
            futures[executor.submit(_run_population_job, config.to_dict(), entry, experiment_dir, verbose)] = entry
        for future in tqdm.tqdm(as_completed(futures), total=len(futures), desc="populations"):
            pid, outputs, error = future.result()
            if error is None:
                manifest.set_status(pid, "done", outputs=outputs or [])
                logging.info(f"Population {pid} done")
            else:
                failed += 1
                manifest.set_status(pid, "failed", error=error)
                logging.error(f"Population {pid} failed:\n{error}")

    if failed:
        logging.error(f"{failed} of {len(todo)} populations failed; rerun to retry them")
        return 1
    return 0


@click.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None, help="YAML config.")
@click.option(
    "--profile", type=click.Choice(available_profiles()), default=None, help="Named config profile (ignored with --config)."
)
@click.option("--difficulty", type=float, multiple=True, help="Target frequency. Can be specified multiple times.")
@click.option("--ndt", type=int, multiple=True, help="Non-decision time. Can be specified multiple times.")
@click.option("--generations", type=int, default=None, help="Generations per population.")
@click.option("--replicates", type=int, default=None, help="Populations per condition.")
@click.option("--population-size", type=int, default=None, help="Agents per population.")
@click.option("--seed", "base_seed", type=int, default=None, help="Base seed of the experiment.")
@click.option("--out", "output_dir", type=str, default=None, help="Experiment output directory.")
@click.option("--threads", type=int, default=None, help="Maximum number of populations run at once.")
@click.option("--verbose", is_flag=True, default=False, help="Whether to print verbose output.")
def evolve(
    config_path: Optional[str],
    profile: Optional[str],
    difficulty: Tuple[float, ...],
    ndt: Tuple[int, ...],
    generations: Optional[int],
    replicates: Optional[int],
    population_size: Optional[int],
    base_seed: Optional[int],
    output_dir: Optional[str],
    threads: Optional[int],
    verbose: bool,
) -> None:
    """
    Evolve populations over a grid of task conditions.
    """
    setup_logging(verbose)

    try:
        config = load_experiment_config(
            config_path,
            profile,
            difficulty_grid=difficulty or None,
            nondecision_grid=ndt or None,
            generations=generations,
            replicates=replicates,
            population_size=population_size,
            base_seed=base_seed,
            output_dir=output_dir,
            parallelism=threads,
        )
    except ValueError as e:
        raise click.UsageError(str(e)) from e

    logging.info(f"Experiment {config.config_hash} writing to {config.resolved_output_dir()}")
    status = run_experiment(config, verbose=verbose)
    if status != 0:
        raise SystemExit(status)
