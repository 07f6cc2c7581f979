import glob
import json
import os
from typing import Any, Dict, List, Optional

import click
import pandas as pd

from evodm.analysis.trajectories import load_lod


@click.command()
@click.argument("experiment_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--out", "output_csv", type=str, default=None, help="Where to write the per-condition summary.")
def main(experiment_dir: str, output_csv: Optional[str]) -> None:
    rows: List[Dict[str, Any]] = []
    for info_path in sorted(glob.glob(os.path.join(experiment_dir, "*", "population.json"))):
        population_dir = os.path.dirname(info_path)
        with open(info_path) as jf:
            info = json.load(jf)
        row: Dict[str, Any] = {"population_id": info["population_id"], "condition": info["condition_label"]}

        stats_path = os.path.join(population_dir, "stats.csv")
        if os.path.exists(stats_path):
            last = pd.read_csv(stats_path).iloc[-1]
            row.update(final_mean_fitness=last["mean_fitness"], final_mean_connections=last["mean_connections"])
        if os.path.exists(os.path.join(population_dir, "ancestry.csv")):
            row["final_lod_connections"] = load_lod(population_dir)[-1].connections

        for summary_path in glob.glob(os.path.join(population_dir, "probe_*", "summary.json")):
            with open(summary_path) as jf:
                summary = json.load(jf)
            row.update(probe_accuracy=summary["pooled_accuracy"], probe_undecided_rate=1 - summary["decided_rate"])
            correlation_path = os.path.join(os.path.dirname(summary_path), "correlation.csv")
            if os.path.exists(correlation_path):
                profile = pd.read_csv(correlation_path)
                row["breadth"] = int((profile["r"] >= 0.1).sum())  # noqa: PLR2004
        rows.append(row)

    if not rows:
        raise click.UsageError(f"No populations found in {experiment_dir}")
    frame = pd.DataFrame(rows)
    summary = frame.drop(columns="population_id").groupby("condition").agg(["mean", "std", "count"])
    print(summary.to_string())
    if output_csv is not None:
        summary.to_csv(output_csv)


if __name__ == "__main__":
    main()
