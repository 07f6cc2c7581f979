"""Append-only run manifest.

Every state change of a population is one JSON line in ``manifest.jsonl``. The current state of
a population is the fold of its events, so an interrupted experiment can always be read back.
"""

import json
import logging
import os
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional

from evodm import __version__

# GitPython raises at import time when no git executable is found unless told to stay quiet
os.environ.setdefault("GIT_PYTHON_REFRESH", "quiet")
import git  # noqa: E402

MANIFEST_NAME = "manifest.jsonl"
STATUSES = ("pending", "running", "done", "failed")


def software_version() -> str:
    """Package version, tagged with the git commit when running from a checkout."""
    try:
        repo = git.Repo(os.path.dirname(os.path.abspath(__file__)), search_parent_directories=True)
        sha = repo.head.commit.hexsha[:10]
        return f"{__version__}+g{sha}{'.dirty' if repo.is_dirty() else ''}"
    except (git.exc.InvalidGitRepositoryError, git.exc.NoSuchPathError, git.exc.GitError, ValueError):
        return __version__


@dataclass
class PopulationEntry:
    population_id: str
    status: str = "pending"
    seed: Optional[int] = None
    condition: Optional[str] = None
    outputs: List[str] = field(default_factory=list)
    error: Optional[str] = None


class RunManifest:
    def __init__(self, experiment_dir: str):
        self.experiment_dir = experiment_dir
        self.path = os.path.join(experiment_dir, MANIFEST_NAME)

    def append(self, event: Dict[str, Any]) -> None:
        os.makedirs(self.experiment_dir, exist_ok=True)
        with open(self.path, "a") as f:
            f.write(json.dumps(event, sort_keys=True) + "\n")
            f.flush()
            os.fsync(f.fileno())

    def events(self) -> List[Dict[str, Any]]:
        if not os.path.exists(self.path):
            return []
        events = []
        with open(self.path) as f:
            for line_number, line in enumerate(f, start=1):
                if not line.strip():
                    continue
                try:
                    events.append(json.loads(line))
                except json.JSONDecodeError:
                    # A process killed mid-write leaves at most a torn last line
                    logging.warning(f"Ignoring unreadable manifest line {line_number} in {self.path}")
        return events

    def start(self, config_hash: str) -> None:
        self.append({"event": "start", "config_hash": config_hash, "software_version": software_version()})

    def set_status(
        self,
        population_id: str,
        status: str,
        seed: Optional[int] = None,
        condition: Optional[str] = None,
        outputs: Iterable[str] = (),
        error: Optional[str] = None,
    ) -> None:
        if status not in STATUSES:
            raise ValueError(f"Unknown population status {status!r}")
        event: Dict[str, Any] = {"event": "population", "population_id": population_id, "status": status}
        if seed is not None:
            event["seed"] = seed
        if condition is not None:
            event["condition"] = condition
        rel_outputs = [self.relative(p) for p in outputs]
        if rel_outputs:
            event["outputs"] = rel_outputs
        if error is not None:
            event["error"] = error
        self.append(event)

    def add_outputs(self, population_id: str, outputs: Iterable[str]) -> None:
        self.append({"event": "outputs", "population_id": population_id, "outputs": [self.relative(p) for p in outputs]})

    def relative(self, path: str) -> str:
        return os.path.relpath(os.path.abspath(path), os.path.abspath(self.experiment_dir))

    def populations(self) -> Dict[str, PopulationEntry]:
        entries: Dict[str, PopulationEntry] = {}
        for event in self.events():
            if event.get("event") not in ("population", "outputs"):
                continue
            pid = event["population_id"]
            entry = entries.setdefault(pid, PopulationEntry(population_id=pid))
            if event["event"] == "population":
                entry.status = event["status"]
                entry.seed = event.get("seed", entry.seed)
                entry.condition = event.get("condition", entry.condition)
                entry.error = event.get("error")
            for path in event.get("outputs", []):
                if path not in entry.outputs:
                    entry.outputs.append(path)
        return entries

    def config_hashes(self) -> List[str]:
        return [e["config_hash"] for e in self.events() if e.get("event") == "start"]


def find_manifest(population_dir: str) -> Optional[RunManifest]:
    """Manifest of the experiment a population directory belongs to, if any."""
    experiment_dir = os.path.dirname(os.path.abspath(population_dir))
    if os.path.exists(os.path.join(experiment_dir, MANIFEST_NAME)):
        return RunManifest(experiment_dir)
    return None


def register_outputs(population_dir: str, outputs: Iterable[str]) -> None:
    manifest = find_manifest(population_dir)
    if manifest is not None:
        manifest.add_outputs(os.path.basename(os.path.normpath(population_dir)), outputs)
