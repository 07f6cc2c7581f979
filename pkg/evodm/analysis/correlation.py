import json
import logging
import os
from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import click
import numpy as np
import pandas as pd

from evodm.brain.base import Source
from evodm.environment.base import TrialRecord
from evodm.environment.records import read_records
from evodm.harness.manifest import register_outputs
from evodm.utils.logging import setup_logging

SYMBOL_CODES = {"01": 1, "10": -1, "00": 0, "11": 0}
DEFAULT_MAX_OFFSET = 50
DEFAULT_N_MIN = 10


@dataclass(frozen=True)
class CorrelationProfile:
    """Per-offset input/answer correlation, time-locked on the decision.

    Offset 0 is the last input before the decision; larger offsets go back in time. ``r`` is None
    wherever it is undefined (too few trials, or a constant input or answer column).
    """

    offsets: Tuple[int, ...]
    r: Tuple[Optional[float], ...]
    n: Tuple[int, ...]
    undecided_rate: float = 0.0

    def breadth(self, threshold: float = 0.1) -> int:
        """Number of offsets whose correlation reaches ``threshold``."""
        return sum(1 for r in self.r if r is not None and r >= threshold)

    def to_frame(self, condition: str) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "condition": [condition] * len(self.offsets),
                "offset": list(self.offsets),
                "r": [np.nan if r is None else r for r in self.r],
                "n": list(self.n),
            }
        )


def code_trial(record: TrialRecord) -> Tuple[List[int], int]:
    """Code a decided trial as (+1/0/-1 inputs, newest first; +1 for an S answer, -1 for N)."""
    if record.decision is None or record.decision_step is None:
        raise ValueError("Only decided trials can be coded")
    coded = [SYMBOL_CODES[s] for s in record.inputs[: record.decision_step + 1]]
    coded.reverse()
    return coded, 1 if record.decision is Source.S else -1


def _pearson(x: np.ndarray, y: np.ndarray) -> Optional[float]:
    dx, dy = x - x.mean(), y - y.mean()
    sxx, syy = float(np.dot(dx, dx)), float(np.dot(dy, dy))
    if sxx <= 0 or syy <= 0:
        return None
    return float(np.clip(np.dot(dx, dy) / np.sqrt(sxx * syy), -1.0, 1.0))


def _pooled_profile(
    coded: Sequence[Tuple[List[int], int]], max_offset: int, n_min: int
) -> Tuple[List[Optional[float]], List[int]]:
    width = max_offset + 1
    matrix = np.full((len(coded), width), np.nan)
    answers = np.zeros(len(coded))
    for i, (inputs, answer) in enumerate(coded):
        k = min(len(inputs), width)
        matrix[i, :k] = inputs[:k]
        answers[i] = answer

    rs: List[Optional[float]] = []
    ns: List[int] = []
    for offset in range(width):
        present = ~np.isnan(matrix[:, offset])
        n = int(present.sum())
        ns.append(n)
        rs.append(_pearson(matrix[present, offset], answers[present]) if n >= n_min else None)
    return rs, ns


def trajectory_correlation(
    records: Sequence[TrialRecord],
    max_offset: int = DEFAULT_MAX_OFFSET,
    n_min: int = DEFAULT_N_MIN,
    per_agent: bool = False,
) -> CorrelationProfile:
    """Correlate the coded input at each offset before the decision with the coded answer.

    Trials are pooled by default. With ``per_agent`` the profile is computed per agent (using the
    records' ``agent_index``) and combined by averaging Fisher z values.
    """
    if not records:
        raise ValueError("trajectory_correlation needs at least one record")
    if n_min < 3:  # noqa: PLR2004
        raise ValueError(f"n_min must be at least 3, got {n_min}")
    if max_offset < 0:
        raise ValueError(f"max_offset must be non-negative, got {max_offset}")

    decided = [r for r in records if r.decided]
    undecided_rate = 1.0 - len(decided) / len(records)
    offsets = tuple(range(max_offset + 1))
    if not per_agent:
        rs, ns = _pooled_profile([code_trial(r) for r in decided], max_offset, n_min)
        return CorrelationProfile(offsets=offsets, r=tuple(rs), n=tuple(ns), undecided_rate=undecided_rate)

    by_agent: Dict[int, List[Tuple[List[int], int]]] = defaultdict(list)
    for record in decided:
        if record.agent_index is None:
            raise ValueError("Per-agent correlation needs records tagged with agent_index")
        by_agent[record.agent_index].append(code_trial(record))

    z_sums = np.zeros(len(offsets))
    z_counts = np.zeros(len(offsets), dtype=np.int64)
    n_totals = np.zeros(len(offsets), dtype=np.int64)
    for coded in by_agent.values():
        rs, ns = _pooled_profile(coded, max_offset, n_min)
        n_totals += np.asarray(ns)
        for k, r in enumerate(rs):
            if r is not None:
                z_sums[k] += np.arctanh(np.clip(r, -0.999999, 0.999999))
                z_counts[k] += 1
    averaged = tuple(float(np.tanh(z_sums[k] / z_counts[k])) if z_counts[k] else None for k in range(len(offsets)))
    return CorrelationProfile(
        offsets=offsets, r=averaged, n=tuple(int(n) for n in n_totals), undecided_rate=undecided_rate
    )


def mirror_record(record: TrialRecord) -> TrialRecord:
    """Swap S and N throughout a record, mirroring [01] and [10] inputs."""
    swap = {"01": "10", "10": "01", "00": "00", "11": "11"}
    return TrialRecord(
        source=record.source.mirrored,
        inputs=tuple(swap[s] for s in record.inputs),
        decision_step=record.decision_step,
        decision=record.decision.mirrored if record.decision is not None else None,
        correct=record.correct,
        agent_index=record.agent_index,
    )


@click.command()
@click.option(
    "--probe",
    "probe_dirs",
    type=click.Path(exists=True),
    multiple=True,
    required=True,
    help="Probe directory (or records.jsonl file). Can be specified multiple times; records are pooled.",
)
@click.option("--max-offset", type=int, default=DEFAULT_MAX_OFFSET, help="Largest offset before the decision.")
@click.option("--n-min", type=int, default=DEFAULT_N_MIN, help="Minimum trials for a defined correlation.")
@click.option("--per-agent", is_flag=True, default=False, help="Average per-agent correlations instead of pooling.")
@click.option("--condition", type=str, default=None, help="Condition label for the output (read from the probe).")
@click.option(
    "--out", "output_csv", type=str, default=None, help="Output CSV path (defaults to <probe>/correlation.csv)."
)
@click.option("--verbose", is_flag=True, default=False, help="Whether to print verbose output.")
def correlate(
    probe_dirs: Tuple[str, ...],
    max_offset: int,
    n_min: int,
    per_agent: bool,
    condition: Optional[str],
    output_csv: Optional[str],
    verbose: bool,
) -> None:
    """
    Build the input-to-decision correlation profile from probe logs.
    """
    setup_logging(verbose)

    records: List[TrialRecord] = []
    for probe_dir in probe_dirs:
        path = os.path.join(probe_dir, "records.jsonl") if os.path.isdir(probe_dir) else probe_dir
        records += read_records(path)
        summary_path = os.path.join(os.path.dirname(path), "summary.json")
        if condition is None and os.path.exists(summary_path):
            with open(summary_path) as f:
                condition = json.load(f).get("condition")
    logging.info(f"Loaded {len(records)} trial records from {len(probe_dirs)} probe(s)")

    profile = trajectory_correlation(records, max_offset=max_offset, n_min=n_min, per_agent=per_agent)
    logging.info(f"Undecided rate: {profile.undecided_rate:.3f}; offsets with r >= 0.1: {profile.breadth()}")

    if output_csv is None:
        base = probe_dirs[0] if os.path.isdir(probe_dirs[0]) else os.path.dirname(probe_dirs[0])
        output_csv = os.path.join(base, "correlation.csv")
    profile.to_frame(condition or "unknown").to_csv(output_csv, index=False, float_format="%.6f")
    population_dir = os.path.dirname(os.path.dirname(os.path.abspath(output_csv)))
    if os.path.exists(os.path.join(population_dir, "population.json")):
        register_outputs(population_dir, [output_csv])
    print(output_csv)
