from evodm.brain.base import Source  # noqa: F401

from .base import DIFFICULTY_LEVELS, NONDECISION_TIMES, SYMBOLS, Condition, TrialRecord  # noqa: F401
from .records import read_records, record_from_dict, record_to_dict, write_records  # noqa: F401
from .stimulus import bits_from_uniforms, ramp_frequency, ramp_schedule, sample_input  # noqa: F401
from .trials import (  # noqa: F401
    AgentEvaluation,
    TrialBatch,
    draw_trials,
    evaluate_agent,
    run_trial,
    simulate_trials,
)
