import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
import tqdm

from evodm.brain.base import connection_count, decode
from evodm.environment.trials import AgentEvaluation, evaluate_agent
from evodm.evolution.ancestry import AncestryTable
from evodm.evolution.config import PopulationConfig
from evodm.evolution.selection import select_parents
from evodm.evolution.sinks import Checkpoint, CompositeSink, EvolutionSink, PopulationStore
from evodm.evolution.stats import GenerationStats, summarize_generation
from evodm.genome.base import Genome, random_seed_genome
from evodm.genome.mutations import mutate
from evodm.utils.random import StreamPurpose, stream

MAX_SEED_DRAWS = 10000


@dataclass(frozen=True)
class PopulationEvaluation:
    fitnesses: np.ndarray
    connections: np.ndarray
    evaluations: Tuple[AgentEvaluation, ...]


@dataclass(frozen=True)
class GenerationResult:
    children: Tuple[Genome, ...]
    fitnesses: np.ndarray
    stats: GenerationStats
    parents: np.ndarray
    connections: np.ndarray


@dataclass(frozen=True)
class EvolutionResult:
    genomes: Tuple[Genome, ...]
    ancestry: AncestryTable
    # Stats emitted by this invocation (a resumed run only carries the generations it ran)
    stats: Tuple[GenerationStats, ...]


def draw_seed_genome(config: PopulationConfig) -> Genome:
    """Draw random genomes from the seed stream until one decodes into ``seed_connection_range`` connections."""
    rng = stream(config.run_seed, StreamPurpose.SEED_GENOME)
    low, high = config.seed_connection_range
    for attempt in range(MAX_SEED_DRAWS):
        seed = random_seed_genome(config.seed_genome_length, rng)
        connections = connection_count(decode(seed))
        if low <= connections <= high:
            logging.debug(f"Seed genome for run {config.run_seed}: {connections} connections after {attempt + 1} draws")
            return seed
    raise RuntimeError(
        f"No seed genome of length {config.seed_genome_length} decoded into {low}-{high} connections "
        f"in {MAX_SEED_DRAWS} draws"
    )


def build_founders(config: PopulationConfig) -> List[Genome]:
    """Generation 0: mutated variants of a single calibrated seed genome."""
    seed = draw_seed_genome(config)
    return [
        mutate(seed, config.rates, stream(config.run_seed, StreamPurpose.FOUNDERS, i))
        for i in range(config.population_size)
    ]


def evaluation_stream(config: PopulationConfig, generation: int, agent_index: int) -> np.random.Generator:
    if config.common_trials:
        return stream(config.run_seed, StreamPurpose.EVALUATION, generation)
    return stream(config.run_seed, StreamPurpose.EVALUATION, generation, agent_index)


def evaluate_population(
    genomes: Sequence[Genome], config: PopulationConfig, generation: int, threads: int = 1
) -> PopulationEvaluation:
    """Decode and evaluate every agent; results are ordered by agent index whatever the thread count."""

    def _evaluate(index: int) -> Tuple[int, AgentEvaluation]:
        brain = decode(genomes[index])
        evaluation = evaluate_agent(brain, config.condition, evaluation_stream(config, generation, index))
        return connection_count(brain), evaluation

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_evaluate, range(len(genomes))))
    else:
        results = [_evaluate(i) for i in range(len(genomes))]

    evaluations = tuple(e for _, e in results)
    return PopulationEvaluation(
        fitnesses=np.asarray([e.fitness for e in evaluations], dtype=np.int64),
        connections=np.asarray([c for c, _ in results], dtype=np.int64),
        evaluations=evaluations,
    )


def advance_generation(
    genomes: Sequence[Genome],
    config: PopulationConfig,
    generation_index: int,
    ancestry: Optional[AncestryTable] = None,
    threads: int = 1,
) -> GenerationResult:
    """Evaluate generation ``generation_index``, select parents by roulette and breed the next one."""
    if len(genomes) != config.population_size:
        raise ValueError(f"Expected {config.population_size} genomes, got {len(genomes)}")

    evaluated = evaluate_population(genomes, config, generation_index, threads=threads)
    parents = select_parents(
        evaluated.fitnesses,
        config.population_size,
        stream(config.run_seed, StreamPurpose.SELECTION, generation_index),
    )
    children = tuple(
        mutate(genomes[p], config.rates, stream(config.run_seed, StreamPurpose.MUTATION, generation_index, i))
        for i, p in enumerate(parents)
    )
    stats = summarize_generation(
        generation_index,
        evaluated.fitnesses,
        evaluated.connections,
        [e.decided for e in evaluated.evaluations],
        [e.decision_step_sum for e in evaluated.evaluations],
        [len(g) for g in genomes],
    )
    if ancestry is not None:
        ancestry.set_evaluation(generation_index, evaluated.fitnesses, evaluated.connections)
        ancestry.set_parents(generation_index + 1, parents)

    return GenerationResult(
        children=children,
        fitnesses=evaluated.fitnesses,
        stats=stats,
        parents=parents,
        connections=evaluated.connections,
    )


def _resume_point(
    config: PopulationConfig, stores: Sequence[PopulationStore]
) -> Tuple[int, List[Genome], AncestryTable, bool]:
    for store in stores:
        checkpoint = store.load_checkpoint(config.config_hash)
        if checkpoint is None:
            continue
        if not checkpoint.finished:
            store.rewind(checkpoint.next_generation)
        ancestry = store.load_ancestry()
        ancestry.set_parents(checkpoint.next_generation, checkpoint.parents)
        logging.info(f"Resuming {store.root} at generation {checkpoint.next_generation}")
        return checkpoint.next_generation, list(checkpoint.genomes), ancestry, checkpoint.finished

    for store in stores:
        # Leftovers from a run killed before its first checkpoint
        store.rewind(0)
    founders = build_founders(config)
    ancestry = AncestryTable()
    ancestry.set_parents(0, np.full(config.population_size, -1, dtype=np.int64))
    return 0, founders, ancestry, False


def run_evolution(
    config: PopulationConfig,
    sinks: Sequence[EvolutionSink] = (),
    threads: int = 1,
    progress: bool = False,
) -> EvolutionResult:
    """Evolve one population for ``config.generations`` generations.

    Any ``PopulationStore`` among the sinks is used to resume from its checkpoint. After the last
    selection the final population is evaluated once more so that its agents have fitness and
    connection counts in the ancestry table; that evaluation does not emit a stats record.
    """
    sink = CompositeSink(sinks)
    stores = [s for s in sinks if isinstance(s, PopulationStore)]
    start, genomes, ancestry, finished = _resume_point(config, stores)
    if finished:
        return EvolutionResult(genomes=tuple(genomes), ancestry=ancestry, stats=())

    snapshot_at = config.snapshot_generations
    emitted: List[GenerationStats] = []
    generations = range(start, config.generations)
    for g in tqdm.tqdm(generations, disable=not progress, desc=f"run {config.run_seed}"):
        result = advance_generation(genomes, config, g, ancestry=ancestry, threads=threads)
        sink.write_ancestry(ancestry, g)
        sink.write_stats(result.stats)
        if g in snapshot_at:
            sink.write_snapshot(g, genomes)
        sink.flush()
        emitted.append(result.stats)
        logging.debug(
            f"Generation {g}: mean fitness {result.stats.mean_fitness:.2f}, "
            f"mean connections {result.stats.mean_connections:.2f}"
        )

        genomes = list(result.children)
        if (g + 1) % config.checkpoint_interval == 0 and g + 1 < config.generations:
            sink.write_checkpoint(
                Checkpoint(
                    next_generation=g + 1,
                    genomes=tuple(genomes),
                    parents=ancestry.parents[g + 1],
                    config_hash=config.config_hash,
                )
            )

    final = config.generations
    evaluated = evaluate_population(genomes, config, final, threads=threads)
    ancestry.set_evaluation(final, evaluated.fitnesses, evaluated.connections)
    sink.write_ancestry(ancestry, final)
    sink.write_snapshot(final, genomes)
    sink.flush()
    sink.write_checkpoint(
        Checkpoint(
            next_generation=final,
            genomes=tuple(genomes),
            parents=ancestry.parents[final],
            config_hash=config.config_hash,
            finished=True,
        )
    )
    return EvolutionResult(genomes=tuple(genomes), ancestry=ancestry, stats=tuple(emitted))
