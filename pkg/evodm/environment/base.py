from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

from evodm.brain.base import Source

SYMBOLS = ("00", "01", "10", "11")
DIFFICULTY_LEVELS = (0.60, 0.65, 0.70, 0.75, 0.80, 0.85, 0.90)
NONDECISION_TIMES = (10, 15, 20, 25, 30, 35, 40, 45, 50)


@dataclass(frozen=True)
class Condition:
    """One cell of the experiment grid."""

    target_freq: float
    nondecision_time: int
    max_steps: int = 100
    trials_per_agent: int = 100

    def __post_init__(self) -> None:
        if not 0.5 < self.target_freq <= 1.0:  # noqa: PLR2004
            raise ValueError(f"target_freq must be in (0.5, 1.0], got {self.target_freq}")
        if not 0 <= self.nondecision_time < self.max_steps:
            raise ValueError(
                f"nondecision_time must be in [0, max_steps={self.max_steps}), got {self.nondecision_time}"
            )
        if self.trials_per_agent < 1:
            raise ValueError(f"trials_per_agent must be positive, got {self.trials_per_agent}")

    @property
    def label(self) -> str:
        return f"f{self.target_freq:.2f}_t{self.nondecision_time}"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "target_freq": self.target_freq,
            "nondecision_time": self.nondecision_time,
            "max_steps": self.max_steps,
            "trials_per_agent": self.trials_per_agent,
        }


@dataclass(frozen=True)
class TrialRecord:
    source: Source
    inputs: Tuple[str, ...]
    decision_step: Optional[int]
    decision: Optional[Source]
    correct: bool
    agent_index: Optional[int] = None

    def __post_init__(self) -> None:
        if (self.decision is None) != (self.decision_step is None):
            raise ValueError("decision and decision_step must both be set or both be None")
        if self.correct != (self.decision is not None and self.decision == self.source):
            raise ValueError("correct must be True exactly when the decision matches the source")
        for symbol in self.inputs:
            if symbol not in SYMBOLS:
                raise ValueError(f"Unknown input symbol {symbol!r}")

    @property
    def score(self) -> int:
        return int(self.correct)

    @property
    def decided(self) -> bool:
        return self.decision is not None
