import json
import os
from pathlib import Path

import click
import numpy as np
import pytest
import yaml
from click.testing import CliRunner

from evodm.cli import main
from evodm.genome import mutate, random_seed_genome
from evodm.harness import ExperimentConfig, RunManifest, load_experiment_config, software_version
from evodm.harness.experiment import expand_grid, run_experiment
from evodm.validation import (
    check_decode_goldens,
    check_mutation_statistics,
    check_ramp_arithmetic,
    check_run,
    check_stimulus_distribution,
)

TINY = {
    "experiment": {"difficulty_grid": [0.9], "nondecision_grid": [5], "replicates": 2, "base_seed": 11},
    "population": {"population_size": 4, "generations": 3, "seed_genome_length": 2000, "snapshot_interval": 1},
    "task": {"max_steps": 20, "trials_per_agent": 10},
    "mutation": {"indel_scope": "genome"},
}


def _write_config(tmp_path: Path) -> str:
    path = str(tmp_path / "tiny.yaml")
    with open(path, "w") as f:
        yaml.safe_dump(TINY, f)
    return path


def test_full_grid_expansion() -> None:
    entries = expand_grid(ExperimentConfig())
    assert len(entries) == 6300
    assert len({e.seed for e in entries}) == 6300
    assert len({e.population_id for e in entries}) == 6300
    assert entries[0].condition.label == "f0.60_t10"
    assert (entries[0].condition_index, entries[0].replicate) == (0, 0)
    assert entries[-1].condition.label == "f0.90_t50"
    assert entries == expand_grid(ExperimentConfig())


def test_grid_seeds_depend_on_base_seed() -> None:
    a = expand_grid(ExperimentConfig(replicates=3, base_seed=1))
    b = expand_grid(ExperimentConfig(replicates=3, base_seed=2))
    assert [e.seed for e in a] != [e.seed for e in b]


def test_empty_grid_is_rejected() -> None:
    with pytest.raises(ValueError):
        expand_grid(ExperimentConfig(difficulty_grid=()))


def test_invalid_grid_values_fail_early() -> None:
    with pytest.raises(ValueError):
        ExperimentConfig(nondecision_grid=(150,))
    with pytest.raises(ValueError):
        ExperimentConfig(replicates=0)


def test_yaml_config_and_overrides(tmp_path: Path) -> None:
    path = _write_config(tmp_path)
    config = ExperimentConfig.from_yaml(path)
    assert config.difficulty_grid == (0.9,)
    assert config.rates.indel_scope == "genome"
    assert config.rates.point == 0.00005

    overridden = ExperimentConfig.from_yaml(path, generations=7, replicates=None, point=0.001)
    assert overridden.generations == 7
    assert overridden.replicates == 2
    assert overridden.rates.point == 0.001


def test_yaml_config_rejects_unknown_keys(tmp_path: Path) -> None:
    path = str(tmp_path / "bad.yaml")
    with open(path, "w") as f:
        yaml.safe_dump({"population": {"populaton_size": 10}}, f)
    with pytest.raises(ValueError):
        ExperimentConfig.from_yaml(path)


def test_profiles() -> None:
    desk = load_experiment_config(profile="desk")
    full = load_experiment_config(profile="full")
    assert len(expand_grid(full)) == 6300
    assert desk.rates.indel_scope == "genome"
    assert desk.generations < full.generations
    with pytest.raises(ValueError):
        load_experiment_config(profile="nope")


def test_bare_evolve_keeps_genomes_bounded(tmp_path: Path) -> None:
    config = load_experiment_config(difficulty_grid=(0.9,), nondecision_grid=(40,))
    assert config.rates == load_experiment_config(profile="desk").rates

    rng = np.random.default_rng(5)
    genome = random_seed_genome(config.seed_genome_length, rng)
    for _ in range(40):
        genome = mutate(genome, config.rates, rng)
    assert len(genome) <= config.seed_genome_length + 40 * config.rates.dup_del_segment_len

    out = str(tmp_path / "bare")
    args = ["evolve", "--difficulty", "0.9", "--ndt", "40", "--replicates", "1", "--generations", "2"]
    result = CliRunner().invoke(main, args + ["--population-size", "4", "--out", out])
    assert result.exit_code == 0, result.output
    with open(os.path.join(out, "p000_r000", "population.json")) as f:
        info = json.load(f)
    assert info["config"]["rates"]["indel_scope"] == "genome"
    assert info["config"]["seed_connection_range"] == [20, 30]


def test_config_hash_ignores_where_a_run_executes() -> None:
    base = ExperimentConfig(replicates=2)
    assert base.config_hash == ExperimentConfig(replicates=2, output_dir="elsewhere", parallelism=8).config_hash
    assert base.config_hash != ExperimentConfig(replicates=3).config_hash
    assert ExperimentConfig.from_dict(yaml.safe_load(base.to_yaml())) == base


def test_output_root_from_environment(monkeypatch: pytest.MonkeyPatch, tmp_path: Path) -> None:
    monkeypatch.setenv("EVODM_OUTPUT_ROOT", str(tmp_path))
    assert ExperimentConfig(output_dir="runs/x").resolved_output_dir() == os.path.join(str(tmp_path), "runs/x")
    assert ExperimentConfig(output_dir="/abs/x").resolved_output_dir() == "/abs/x"


def test_manifest_folds_events(tmp_path: Path) -> None:
    manifest = RunManifest(str(tmp_path))
    manifest.start("abc")
    manifest.set_status("p000_r000", "pending", seed=7, condition="f0.90_t40")
    manifest.set_status("p000_r000", "running")
    manifest.set_status("p000_r000", "done", outputs=[str(tmp_path / "p000_r000" / "stats.csv")])
    manifest.add_outputs("p000_r000", [str(tmp_path / "p000_r000" / "probe_0" / "summary.json")])
    with open(manifest.path, "a") as f:
        f.write('{"event": "popul')

    entry = manifest.populations()["p000_r000"]
    assert entry.status == "done"
    assert entry.seed == 7
    assert entry.outputs == [os.path.join("p000_r000", "stats.csv"), os.path.join("p000_r000", "probe_0", "summary.json")]
    assert manifest.config_hashes() == ["abc"]
    with pytest.raises(ValueError):
        manifest.set_status("p000_r000", "lost")


def test_software_version() -> None:
    assert software_version().startswith("0.")


def test_evolve_then_validate(tmp_path: Path) -> None:
    out = str(tmp_path / "exp")
    runner = CliRunner()
    result = runner.invoke(main, ["evolve", "--config", _write_config(tmp_path), "--out", out, "--threads", "2"])
    assert result.exit_code == 0, result.output

    entries = RunManifest(out).populations()
    assert sorted(entries) == ["p000_r000", "p000_r001"]
    assert all(e.status == "done" for e in entries.values())
    info = json.load(open(os.path.join(out, "p000_r000", "population.json")))
    assert info["condition_label"] == "f0.90_t5"
    assert os.path.exists(os.path.join(out, "p000_r000", "probe_0", "records.jsonl"))
    assert all(r.passed for r in check_run(out)), check_run(out)

    result = runner.invoke(main, ["validate", "--run", out, "--oracle", "ramp_arithmetic"])
    assert result.exit_code == 0, result.output

    # A second invocation finds everything done and leaves the outputs alone
    stats_path = os.path.join(out, "p000_r001", "stats.csv")
    before = open(stats_path, "rb").read()
    result = runner.invoke(main, ["evolve", "--config", _write_config(tmp_path), "--out", out])
    assert result.exit_code == 0, result.output
    assert open(stats_path, "rb").read() == before

    # Orphaned files are reported
    with open(os.path.join(out, "p000_r000", "stray.txt"), "w") as f:
        f.write("x")
    assert not all(r.passed for r in check_run(out))


def test_runs_are_reproducible(tmp_path: Path) -> None:
    path = _write_config(tmp_path)
    for name in ("a", "b"):
        assert run_experiment(ExperimentConfig.from_yaml(path, output_dir=str(tmp_path / name))) == 0
    for rel in ("p000_r000/stats.csv", "p000_r001/ancestry.csv", "p000_r000/probe_0/records.jsonl"):
        assert open(tmp_path / "a" / rel, "rb").read() == open(tmp_path / "b" / rel, "rb").read()


def test_conflicting_config_in_output_dir(tmp_path: Path) -> None:
    path = _write_config(tmp_path)
    out = str(tmp_path / "exp")
    assert run_experiment(ExperimentConfig.from_yaml(path, output_dir=out)) == 0
    with pytest.raises(click.UsageError):
        run_experiment(ExperimentConfig.from_yaml(path, output_dir=out, generations=4))


def test_oracle_suite() -> None:
    for check in (check_stimulus_distribution, check_mutation_statistics, check_decode_goldens, check_ramp_arithmetic):
        result = check()
        assert result.passed, result


if __name__ == "__main__":
    test_full_grid_expansion()
    test_oracle_suite()
