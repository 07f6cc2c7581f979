import json
import logging
import os
from dataclasses import asdict, dataclass
from typing import Any, Callable, Dict, List, Optional, Sequence, Set

import click
import numpy as np
import yaml
from scipy import stats

from evodm.brain.base import decode, dump_brain
from evodm.environment.stimulus import bits_from_uniforms, ramp_frequency
from evodm.genome.base import Genome, random_seed_genome
from evodm.genome.mutations import MutationRates, mutate_with_counts
from evodm.harness.config import ExperimentConfig
from evodm.harness.experiment import expand_grid
from evodm.harness.manifest import MANIFEST_NAME, RunManifest
from evodm.utils.logging import setup_logging

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")
DECODE_GOLDENS = os.path.join(DATA_DIR, "decode_goldens.yaml")

SYMBOL_TOLERANCE = 0.003
CHI_SQUARE_ALPHA = 0.001


@dataclass(frozen=True)
class OracleResult:
    name: str
    passed: bool
    detail: str


def expected_symbol_frequencies(freq: float) -> Dict[str, float]:
    """Symbol probabilities for source S at bit frequency ``freq``."""
    return {
        "01": freq * freq,
        "00": freq * (1 - freq),
        "11": (1 - freq) * freq,
        "10": (1 - freq) * (1 - freq),
    }


def check_stimulus_distribution(
    freqs: Sequence[float] = (0.9, 0.6), draws: int = 1_000_000, seed: int = 0
) -> OracleResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for freq in freqs:
        bits = bits_from_uniforms(np.ones(draws, dtype=bool), np.full(draws, freq), rng.random((draws, 2)))
        codes = bits[:, 0] * 2 + bits[:, 1]
        observed = np.bincount(codes, minlength=4) / draws
        for symbol, expected in expected_symbol_frequencies(freq).items():
            worst = max(worst, abs(observed[int(symbol, 2)] - expected))
    return OracleResult(
        "stimulus_distribution", worst <= SYMBOL_TOLERANCE, f"largest deviation {worst:.5f} over {draws} draws"
    )


def binomial_chisquare(counts: Sequence[int], n: int, p: float) -> float:
    """P-value of observed event counts against Binomial(n, p).

    Sparse tails are pooled so that every bin expects at least five observations.
    """
    arr = np.asarray(counts)
    total = arr.size
    dist = stats.binom(n, p)
    lo = 0
    while total * dist.cdf(lo) < 5:  # noqa: PLR2004
        lo += 1
    hi = lo
    while total * dist.sf(hi + 1) >= 5:  # noqa: PLR2004
        hi += 1
    if hi <= lo:
        raise ValueError("Too few replications for a chi-square test")
    expected = [dist.cdf(lo)] + [dist.pmf(k) for k in range(lo + 1, hi + 1)] + [dist.sf(hi)]
    observed = [np.sum(arr <= lo)] + [np.sum(arr == k) for k in range(lo + 1, hi + 1)] + [np.sum(arr > hi)]
    return float(stats.chisquare(observed, np.asarray(expected) * total).pvalue)


def check_mutation_statistics(replications: int = 10_000, seed: int = 0) -> OracleResult:
    defaults = MutationRates()
    cases = {
        # Only one kind of event per case, so that counts are drawn on an unchanged genome length
        "point": (100_000, MutationRates(point=defaults.point, duplication=0.0, deletion=0.0)),
        "duplication": (4096, MutationRates(point=0.0, duplication=defaults.duplication, deletion=0.0)),
        "deletion": (4096, MutationRates(point=0.0, duplication=0.0, deletion=defaults.deletion)),
    }
    rng = np.random.default_rng(seed)
    p_values: Dict[str, float] = {}
    for name, (length, rates) in cases.items():
        parent = random_seed_genome(length, rng)
        counts = [getattr(mutate_with_counts(parent, rates, rng)[1], name) for _ in range(replications)]
        p_values[name] = binomial_chisquare(counts, length, getattr(rates, name))
    passed = all(p >= CHI_SQUARE_ALPHA for p in p_values.values())
    detail = ", ".join(f"{name} p={p:.4f}" for name, p in p_values.items())
    return OracleResult("mutation_statistics", passed, detail)


def load_decode_goldens(path: str = DECODE_GOLDENS) -> List[Dict[str, Any]]:
    with open(path) as f:
        return list(yaml.safe_load(f))


def check_decode_goldens(path: str = DECODE_GOLDENS) -> OracleResult:
    failures: List[str] = []
    goldens = load_decode_goldens(path)
    for golden in goldens:
        got = dump_brain(decode(Genome.from_string(golden["genome"])))
        if got != "\n".join(golden["gates"]):
            failures.append(golden["name"])
    detail = f"{len(goldens) - len(failures)}/{len(goldens)} goldens match"
    if failures:
        detail += f"; mismatched: {', '.join(failures)}"
    return OracleResult("decode_goldens", not failures, detail)


def check_ramp_arithmetic() -> OracleResult:
    cases = [(0, 0.9, 0.5), (5, 0.6, 0.55), (10, 0.6, 0.6), (39, 0.9, 0.89), (40, 0.9, 0.9), (99, 0.75, 0.75)]
    wrong = [c for c in cases if not np.isclose(ramp_frequency(c[0], c[1]), c[2])]
    return OracleResult("ramp_arithmetic", not wrong, f"{len(cases) - len(wrong)}/{len(cases)} cases match")


ORACLES: Dict[str, Callable[[], OracleResult]] = {
    "stimulus_distribution": check_stimulus_distribution,
    "mutation_statistics": check_mutation_statistics,
    "decode_goldens": check_decode_goldens,
    "ramp_arithmetic": check_ramp_arithmetic,
}


def check_run(experiment_dir: str) -> List[OracleResult]:
    """Check an experiment directory against its manifest."""
    manifest = RunManifest(experiment_dir)
    if not os.path.exists(manifest.path):
        raise FileNotFoundError(f"No {MANIFEST_NAME} in {experiment_dir}")
    entries = manifest.populations()

    results: List[OracleResult] = []
    config_path = os.path.join(experiment_dir, "config.yaml")
    if os.path.exists(config_path):
        grid = [e.population_id for e in expand_grid(ExperimentConfig.from_yaml(config_path))]
        unfinished = [pid for pid in grid if pid not in entries or entries[pid].status != "done"]
        results.append(OracleResult("run_complete", not unfinished, f"{len(grid) - len(unfinished)}/{len(grid)} done"))

    listed = {path for entry in entries.values() for path in entry.outputs}
    missing = sorted(path for path in listed if not os.path.exists(os.path.join(experiment_dir, path)))
    results.append(OracleResult("run_files_present", not missing, f"{len(missing)} missing: {missing[:5]}"))

    on_disk: Set[str] = set()
    for pid in entries:
        for dirpath, _, filenames in os.walk(os.path.join(experiment_dir, pid)):
            on_disk.update(os.path.relpath(os.path.join(dirpath, name), experiment_dir) for name in filenames)
    # Populations still in progress have not listed their files yet
    settled = {pid for pid, entry in entries.items() if entry.status == "done"}
    orphans = sorted(path for path in on_disk - listed if path.split(os.sep)[0] in settled)
    results.append(OracleResult("run_no_orphans", not orphans, f"{len(orphans)} orphaned: {orphans[:5]}"))
    return results


@click.command()
@click.option("--run", "run_dir", type=click.Path(exists=True, file_okay=False), default=None, help="Experiment to check.")
@click.option(
    "--oracle", "oracles", type=click.Choice(list(ORACLES)), multiple=True, help="Run only these oracles."
)
@click.option("--verbose", is_flag=True, default=False, help="Whether to print verbose output.")
def validate(run_dir: Optional[str], oracles: Sequence[str], verbose: bool) -> None:
    """
    Run the oracle suite and, with --run, check an experiment against its manifest.
    """
    setup_logging(verbose)

    results: List[OracleResult] = []
    for name in oracles or ORACLES:
        logging.info(f"Running oracle {name}...")
        results.append(ORACLES[name]())
    if run_dir is not None:
        results += check_run(run_dir)

    for result in results:
        log = logging.info if result.passed else logging.error
        log(f"{result.name}: {'ok' if result.passed else 'FAILED'} ({result.detail})")
    print(json.dumps([asdict(r) for r in results], indent=2))
    if not all(r.passed for r in results):
        raise SystemExit(1)
