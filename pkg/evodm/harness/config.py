import os
from dataclasses import asdict, dataclass, field, replace
from typing import Any, ClassVar, Dict, Optional, Tuple

import yaml

from evodm.environment.base import DIFFICULTY_LEVELS, NONDECISION_TIMES, Condition
from evodm.evolution.config import DEFAULT_SEED_CONNECTION_RANGE, DEFAULT_SEED_GENOME_LENGTH, calibrated_rates
from evodm.genome.mutations import MutationRates
from evodm.utils.python import compute_config_hash

OUTPUT_ROOT_ENV = "EVODM_OUTPUT_ROOT"
PROFILES_DIR = os.path.join(os.path.dirname(os.path.dirname(__file__)), "configs")


@dataclass(frozen=True)
class ExperimentConfig:
    difficulty_grid: Tuple[float, ...] = DIFFICULTY_LEVELS
    nondecision_grid: Tuple[int, ...] = NONDECISION_TIMES
    replicates: int = 100
    base_seed: int = 0
    output_dir: str = "runs"
    parallelism: int = 1

    population_size: int = 100
    generations: int = 10000
    seed_genome_length: int = DEFAULT_SEED_GENOME_LENGTH
    seed_connection_range: Tuple[int, int] = DEFAULT_SEED_CONNECTION_RANGE
    snapshot_interval: int = 1000
    checkpoint_interval: int = 1
    common_trials: bool = False

    max_steps: int = 100
    trials_per_agent: int = 100
    rates: MutationRates = field(default_factory=calibrated_rates)

    probe_after_run: bool = True
    lod_agent_index: int = 0
    max_offset: int = 50
    n_min: int = 10

    def __post_init__(self) -> None:
        object.__setattr__(self, "difficulty_grid", tuple(float(x) for x in self.difficulty_grid))
        object.__setattr__(self, "nondecision_grid", tuple(int(x) for x in self.nondecision_grid))
        object.__setattr__(self, "seed_connection_range", tuple(int(x) for x in self.seed_connection_range))
        if self.replicates < 1:
            raise ValueError(f"replicates must be at least 1, got {self.replicates}")
        if self.parallelism < 1:
            raise ValueError(f"parallelism must be at least 1, got {self.parallelism}")
        # Builds every grid condition once so that invalid values fail early
        for target in self.difficulty_grid:
            for ndt in self.nondecision_grid:
                Condition(target, ndt, max_steps=self.max_steps, trials_per_agent=self.trials_per_agent)

    # Sections of the YAML file and the fields that live in them
    SECTIONS: ClassVar[Dict[str, Tuple[str, ...]]] = {
        "experiment": ("difficulty_grid", "nondecision_grid", "replicates", "base_seed", "output_dir", "parallelism"),
        "population": (
            "population_size",
            "generations",
            "seed_genome_length",
            "seed_connection_range",
            "snapshot_interval",
            "checkpoint_interval",
            "common_trials",
        ),
        "task": ("max_steps", "trials_per_agent"),
        "analysis": ("probe_after_run", "lod_agent_index", "max_offset", "n_min"),
    }

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            section: {name: getattr(self, name) for name in names} for section, names in self.SECTIONS.items()
        }
        data["experiment"]["difficulty_grid"] = list(self.difficulty_grid)
        data["experiment"]["nondecision_grid"] = list(self.nondecision_grid)
        data["population"]["seed_connection_range"] = list(self.seed_connection_range)
        data["mutation"] = asdict(self.rates)
        return data

    @property
    def config_hash(self) -> str:
        # Where and how wide a run executes does not change its outputs
        data = self.to_dict()
        data["experiment"] = {k: v for k, v in data["experiment"].items() if k not in ("output_dir", "parallelism")}
        return compute_config_hash(data)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperimentConfig":
        kwargs: Dict[str, Any] = {}
        for section, names in cls.SECTIONS.items():
            values = data.get(section) or {}
            unknown = set(values) - set(names)
            if unknown:
                raise ValueError(f"Unknown keys in section '{section}': {sorted(unknown)}")
            kwargs.update(values)
        unknown_sections = set(data) - set(cls.SECTIONS) - {"mutation"}
        if unknown_sections:
            raise ValueError(f"Unknown config sections: {sorted(unknown_sections)}")
        if data.get("mutation"):
            # Keys left out of the mutation section keep the calibrated defaults
            kwargs["rates"] = replace(calibrated_rates(), **data["mutation"])
        return cls(**kwargs)

    @classmethod
    def from_yaml(cls, path: str, **overrides: Any) -> "ExperimentConfig":
        with open(path) as f:
            config = cls.from_dict(yaml.safe_load(f) or {})
        return config.with_overrides(**overrides)

    @classmethod
    def from_profile(cls, name: str, **overrides: Any) -> "ExperimentConfig":
        path = os.path.join(PROFILES_DIR, f"{name}.yaml")
        if not os.path.exists(path):
            raise ValueError(f"Unknown profile {name!r}; available: {available_profiles()}")
        return cls.from_yaml(path, **overrides)

    def with_overrides(self, **overrides: Any) -> "ExperimentConfig":
        # Flags win over file values; None means the flag was not given
        given = {k: v for k, v in overrides.items() if v is not None}
        rate_overrides = {k: given.pop(k) for k in list(given) if k in MutationRates.__dataclass_fields__}
        config = replace(self, **given)
        if rate_overrides:
            config = replace(config, rates=replace(config.rates, **rate_overrides))
        return config

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    def resolved_output_dir(self) -> str:
        root = os.getenv(OUTPUT_ROOT_ENV)
        if root and not os.path.isabs(self.output_dir):
            return os.path.join(root, self.output_dir)
        return self.output_dir


def available_profiles() -> Tuple[str, ...]:
    return tuple(sorted(name[:-5] for name in os.listdir(PROFILES_DIR) if name.endswith(".yaml")))


def load_experiment_config(
    config_path: Optional[str] = None, profile: Optional[str] = None, **overrides: Any
) -> ExperimentConfig:
    if config_path is not None:
        return ExperimentConfig.from_yaml(config_path, **overrides)
    if profile is not None:
        return ExperimentConfig.from_profile(profile, **overrides)
    return ExperimentConfig().with_overrides(**overrides)
