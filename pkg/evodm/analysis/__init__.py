from evodm.evolution.ancestry import LodEntry  # noqa: F401

from .correlation import CorrelationProfile, code_trial, mirror_record, trajectory_correlation  # noqa: F401
from .probe import ProbeResult, accuracy_summary, probe_generation, probe_population  # noqa: F401
from .trajectories import (  # noqa: F401
    TrajectorySummary,
    average_lod_trajectories,
    load_lod,
    population_dirs,
    trajectory_frame,
)
