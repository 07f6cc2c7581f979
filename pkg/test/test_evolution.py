import os
from pathlib import Path
from typing import Any, Dict, List

import numpy as np
import pytest

import evodm.evolution.population as population_module
from evodm.brain import connection_count, decode
from evodm.environment import Condition
from evodm.evolution import (
    EXTRA_STATS_COLUMNS,
    STATS_COLUMNS,
    AncestryIntegrityError,
    AncestryTable,
    CheckpointMismatchError,
    EvolutionSink,
    GenerationStats,
    MemorySink,
    PopulationConfig,
    PopulationStore,
    advance_generation,
    build_founders,
    draw_seed_genome,
    evaluate_population,
    extract_lod,
    run_evolution,
    select_parents,
)
from evodm.genome import MutationRates


def _small_config(**kwargs: Any) -> PopulationConfig:
    defaults: Dict[str, Any] = dict(
        condition=Condition(0.9, 10, max_steps=30, trials_per_agent=20),
        population_size=10,
        generations=4,
        seed_genome_length=2000,
        run_seed=123,
        snapshot_interval=2,
    )
    defaults.update(kwargs)
    return PopulationConfig(**defaults)


class _CrashAt(EvolutionSink):
    """Fails while a given generation is being written, like a killed process."""

    def __init__(self, generation: int):
        self.generation = generation

    def write_stats(self, stats: GenerationStats) -> None:
        if stats.generation == self.generation:
            raise RuntimeError(f"interrupted at generation {stats.generation}")

    def write_ancestry(self, ancestry: AncestryTable, generation: int) -> None:
        pass


def _read_bytes(path: str) -> bytes:
    with open(path, "rb") as f:
        return f.read()


def test_select_parents_degenerate_mass() -> None:
    rng = np.random.default_rng(0)
    assert list(select_parents([5, 0, 0], 50, rng)) == [0] * 50
    assert set(select_parents([0, 0, 100, 0], 50, rng)) == {2}


def test_select_parents_zero_total_is_uniform() -> None:
    parents = select_parents([0, 0, 0, 0], 40000, np.random.default_rng(1))
    counts = np.bincount(parents, minlength=4)
    assert np.all(np.abs(counts / 40000 - 0.25) < 0.01)


def test_select_parents_is_proportional() -> None:
    parents = select_parents([1, 3, 6], 100000, np.random.default_rng(2))
    counts = np.bincount(parents, minlength=3) / 100000
    assert np.allclose(counts, [0.1, 0.3, 0.6], atol=0.006)


def test_select_parents_rejects_bad_input() -> None:
    rng = np.random.default_rng(3)
    with pytest.raises(ValueError):
        select_parents([], 5, rng)
    with pytest.raises(ValueError):
        select_parents([1, -1], 5, rng)
    with pytest.raises(ValueError):
        select_parents([1, 1], 0, rng)


def test_population_config_validation() -> None:
    with pytest.raises(ValueError):
        _small_config(population_size=1)
    with pytest.raises(ValueError):
        _small_config(generations=0)
    with pytest.raises(ValueError):
        _small_config(seed_connection_range=(30, 20))
    config = _small_config(generations=100, snapshot_interval=40)
    assert config.probe_generation == 70
    assert config.snapshot_generations == frozenset({0, 40, 70, 80, 100})
    assert PopulationConfig.from_dict(config.to_dict()) == config


def test_founders_are_reproducible_variants() -> None:
    config = _small_config()
    founders = build_founders(config)
    assert len(founders) == config.population_size
    assert founders == build_founders(config)
    assert all(abs(len(g) - config.seed_genome_length) <= 2 * 256 * 10 for g in founders)


def test_founders_start_in_the_calibrated_connection_band() -> None:
    for run_seed in range(30):
        config = PopulationConfig(condition=Condition(0.9, 40), run_seed=run_seed)
        assert 20 <= connection_count(decode(draw_seed_genome(config))) <= 30
        mean = np.mean([connection_count(decode(g)) for g in build_founders(config)])
        assert 18 <= mean <= 32, (run_seed, mean)


def test_seed_genome_draws_are_bounded(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setattr(population_module, "MAX_SEED_DRAWS", 3)
    with pytest.raises(RuntimeError):
        draw_seed_genome(_small_config(seed_connection_range=(500, 600)))


def test_advance_generation_without_mutation_copies_parents() -> None:
    config = _small_config(rates=MutationRates.zero())
    genomes = build_founders(config)
    ancestry = AncestryTable()
    result = advance_generation(genomes, config, 0, ancestry=ancestry)
    assert len(result.children) == config.population_size
    for child, parent in zip(result.children, result.parents):
        assert child == genomes[parent]
    assert np.array_equal(ancestry.parents[1], result.parents)
    assert np.array_equal(ancestry.fitness[0], result.fitnesses)
    assert result.stats.generation == 0
    assert result.stats.max_fitness == int(result.fitnesses.max())


def test_advance_generation_checks_population_size() -> None:
    config = _small_config()
    with pytest.raises(ValueError):
        advance_generation(build_founders(config)[:5], config, 0)


def test_evaluation_does_not_depend_on_thread_count() -> None:
    config = _small_config()
    genomes = build_founders(config)
    single = evaluate_population(genomes, config, 0, threads=1)
    pooled = evaluate_population(genomes, config, 0, threads=4)
    assert np.array_equal(single.fitnesses, pooled.fitnesses)
    assert np.array_equal(single.connections, pooled.connections)


def test_single_generation_run() -> None:
    sink = MemorySink()
    result = run_evolution(_small_config(generations=1), sinks=[sink])
    assert len(result.stats) == 1
    assert len(sink.stats) == 1
    assert result.ancestry.depth == 1
    assert len(extract_lod(result.ancestry, 3)) == 2


def test_run_emits_stats_and_snapshots() -> None:
    sink = MemorySink()
    config = _small_config(generations=5)
    result = run_evolution(config, sinks=[sink])
    assert [s.generation for s in sink.stats] == [0, 1, 2, 3, 4]
    assert sorted(sink.snapshots) == [0, 2, 4, 5]
    assert sink.ancestry_generations == [0, 1, 2, 3, 4, 5]
    assert sink.checkpoints[-1].finished
    assert sink.snapshots[5] == result.genomes
    lod = extract_lod(result.ancestry, 0)
    assert [e.generation for e in lod] == [0, 1, 2, 3, 4, 5]


def test_run_is_deterministic_across_thread_counts() -> None:
    config = _small_config()
    a = run_evolution(config, threads=1)
    b = run_evolution(config, threads=3)
    assert a.genomes == b.genomes
    assert a.stats == b.stats


def test_common_trials_run() -> None:
    result = run_evolution(_small_config(common_trials=True, generations=2))
    assert len(result.stats) == 2


def test_store_writes_csv_streams(tmp_path: Path) -> None:
    config = _small_config()
    store = PopulationStore(str(tmp_path / "p0"), population_id="p0")
    run_evolution(config, sinks=[store])
    stats = store.load_stats()
    assert list(stats.columns) == STATS_COLUMNS
    assert list(stats["generation"]) == [0, 1, 2, 3]
    assert set(stats["population_id"]) == {"p0"}
    extra = store.load_extra_stats()
    assert list(extra.columns) == EXTRA_STATS_COLUMNS
    assert list(extra["generation"]) == [0, 1, 2, 3]
    assert (extra["mean_genome_length"] >= 2000).all()
    ancestry = store.load_ancestry()
    assert sorted(ancestry.fitness) == [0, 1, 2, 3, 4]
    assert store.snapshot_generations() == [0, 2, 4]
    assert len(store.load_snapshot(4)) == config.population_size
    with pytest.raises(FileNotFoundError):
        store.load_snapshot(3)


def test_store_reads_leave_the_disk_alone(tmp_path: Path) -> None:
    root = tmp_path / "not_yet"
    store = PopulationStore(str(root))
    assert store.snapshot_generations() == []
    assert store.load_checkpoint("abc") is None
    assert store.load_ancestry().fitness == {}
    assert store.written_files() == []
    assert not root.exists()

    store.write_stats(GenerationStats(0, 1.0, 2, 3.0, None))
    assert os.path.exists(store.stats_path)
    assert not os.path.exists(store.snapshot_dir)


def test_resume_matches_uninterrupted_run(tmp_path: Path) -> None:
    config = _small_config(generations=6)
    full = PopulationStore(str(tmp_path / "full"))
    run_evolution(config, sinks=[full])

    resumed = PopulationStore(str(tmp_path / "resumed"))
    with pytest.raises(RuntimeError):
        run_evolution(config, sinks=[resumed, _CrashAt(3)])
    run_evolution(config, sinks=[PopulationStore(str(tmp_path / "resumed"))])

    for name in ("stats.csv", "stats_extra.csv", "ancestry.csv"):
        assert _read_bytes(os.path.join(full.root, name)) == _read_bytes(os.path.join(resumed.root, name))
    assert full.snapshot_generations() == resumed.snapshot_generations()
    for g in full.snapshot_generations():
        assert _read_bytes(full.snapshot_path(g)) == _read_bytes(resumed.snapshot_path(g))


def test_finished_run_is_not_rerun(tmp_path: Path) -> None:
    config = _small_config()
    store = PopulationStore(str(tmp_path / "p"))
    run_evolution(config, sinks=[store])
    before = _read_bytes(store.stats_path)
    result = run_evolution(config, sinks=[store])
    assert result.stats == ()
    assert _read_bytes(store.stats_path) == before


def test_checkpoint_from_other_config_is_refused(tmp_path: Path) -> None:
    store = PopulationStore(str(tmp_path / "p"))
    run_evolution(_small_config(), sinks=[store])
    with pytest.raises(CheckpointMismatchError):
        run_evolution(_small_config(run_seed=999), sinks=[store])


def _hand_ancestry() -> AncestryTable:
    table = AncestryTable()
    table.set_parents(0, np.asarray([-1, -1]))
    table.set_evaluation(0, np.asarray([10, 20]), np.asarray([1, 2]))
    table.set_parents(1, np.asarray([1, 0]))
    table.set_evaluation(1, np.asarray([30, 40]), np.asarray([3, 4]))
    table.set_parents(2, np.asarray([1, 1]))
    table.set_evaluation(2, np.asarray([50, 60]), np.asarray([5, 6]))
    return table


def test_extract_lod_by_hand() -> None:
    lod = extract_lod(_hand_ancestry(), 0)
    assert [(e.generation, e.fitness, e.connections) for e in lod] == [(0, 10, 1), (1, 40, 4), (2, 50, 5)]


def test_extract_lod_errors() -> None:
    table = _hand_ancestry()
    with pytest.raises(ValueError):
        extract_lod(table, 2)
    del table.fitness[1]
    with pytest.raises(AncestryIntegrityError):
        extract_lod(table, 0)


def test_ancestry_frame_round_trip() -> None:
    table = _hand_ancestry()
    restored = AncestryTable.from_frame(table.to_frame())
    assert extract_lod(restored, 1) == extract_lod(table, 1)


def _ancestor_indices(ancestry: AncestryTable, final_index: int) -> List[int]:
    index = final_index
    chain = [index]
    for g in range(ancestry.last_generation, 0, -1):
        index = int(ancestry.parents[g][index])
        chain.append(index)
    chain.reverse()
    return chain


def test_lines_of_descent_coalesce() -> None:
    config = _small_config(generations=100, snapshot_interval=1000)
    ancestry = run_evolution(config).ancestry
    first = _ancestor_indices(ancestry, 0)
    last = _ancestor_indices(ancestry, config.population_size - 1)
    assert first[:10] == last[:10]


if __name__ == "__main__":
    test_resume_matches_uninterrupted_run(Path("/tmp/evodm-test"))
