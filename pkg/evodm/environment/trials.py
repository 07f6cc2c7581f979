from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from evodm.brain.base import NODE_COUNT, Brain, Source
from evodm.brain.update import ANSWER_N, ANSWER_S, NO_ANSWER, answer_codes, step_batch
from evodm.environment.base import Condition, TrialRecord
from evodm.environment.stimulus import bits_from_uniforms, ramp_schedule

_CODE_TO_SOURCE = {ANSWER_S: Source.S, ANSWER_N: Source.N}


@dataclass(frozen=True)
class TrialBatch:
    """Raw outcome of a batch of trials run side by side."""

    is_signal: np.ndarray  # (T,) bool
    input_bits: np.ndarray  # (T, max_steps, 2) uint8, drawn up front for every step
    decisions: np.ndarray  # (T,) answer codes
    decision_steps: np.ndarray  # (T,) step index, -1 when undecided

    @property
    def correct(self) -> np.ndarray:
        expected = np.where(self.is_signal, ANSWER_S, ANSWER_N)
        return self.decisions == expected

    def record(self, i: int, agent_index: Optional[int] = None) -> TrialRecord:
        code = int(self.decisions[i])
        step = int(self.decision_steps[i])
        # Inputs run up to and including the step the decision was made on
        n_inputs = step + 1 if code != NO_ANSWER else self.input_bits.shape[1]
        inputs = tuple(f"{left}{right}" for left, right in self.input_bits[i, :n_inputs])
        return TrialRecord(
            source=Source.S if self.is_signal[i] else Source.N,
            inputs=inputs,
            decision_step=step if code != NO_ANSWER else None,
            decision=_CODE_TO_SOURCE.get(code),
            correct=bool(self.correct[i]),
            agent_index=agent_index,
        )


def simulate_trials(brain: Brain, condition: Condition, is_signal: np.ndarray, uniforms: np.ndarray) -> TrialBatch:
    """Run one trial per row of ``uniforms`` (shape (T, max_steps, 2)) against ``brain``.

    Every trial starts from the all-zero state. Answers shown before the non-decision time are
    ignored; the first answer at an eligible step ends that trial.
    """
    n_trials = is_signal.shape[0]
    freqs = ramp_schedule(condition.max_steps, condition.target_freq)
    input_bits = bits_from_uniforms(is_signal[:, None], freqs[None, :], uniforms)

    states = np.zeros((n_trials, NODE_COUNT), dtype=np.uint8)
    decisions = np.full(n_trials, NO_ANSWER, dtype=np.int8)
    decision_steps = np.full(n_trials, -1, dtype=np.int64)
    active = np.arange(n_trials)

    for step in range(condition.max_steps):
        if active.size == 0:
            break
        nxt = step_batch(brain, states[active], input_bits[active, step])
        states[active] = nxt
        if step < condition.nondecision_time:
            continue
        codes = answer_codes(nxt)
        answered = codes != NO_ANSWER
        if answered.any():
            done = active[answered]
            decisions[done] = codes[answered]
            decision_steps[done] = step
            active = active[~answered]

    return TrialBatch(is_signal=is_signal, input_bits=input_bits, decisions=decisions, decision_steps=decision_steps)


def run_trial(brain: Brain, condition: Condition, source: Source, rng: np.random.Generator) -> TrialRecord:
    uniforms = rng.random((1, condition.max_steps, 2))
    batch = simulate_trials(brain, condition, np.asarray([source is Source.S]), uniforms)
    return batch.record(0)


@dataclass(frozen=True)
class AgentEvaluation:
    fitness: int
    decided: int
    decision_step_sum: int
    records: Optional[Tuple[TrialRecord, ...]] = None

    @property
    def mean_decision_step(self) -> Optional[float]:
        return self.decision_step_sum / self.decided if self.decided else None


def draw_trials(condition: Condition, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """Draw sources (uniform over S and N) and the step uniforms for a block of trials."""
    is_signal = rng.integers(0, 2, size=condition.trials_per_agent) == 0
    uniforms = rng.random((condition.trials_per_agent, condition.max_steps, 2))
    return is_signal, uniforms


def evaluate_agent(
    brain: Brain,
    condition: Condition,
    rng: np.random.Generator,
    keep_records: bool = False,
    agent_index: Optional[int] = None,
) -> AgentEvaluation:
    """Score ``brain`` over ``condition.trials_per_agent`` trials; fitness is the number correct."""
    is_signal, uniforms = draw_trials(condition, rng)
    batch = simulate_trials(brain, condition, is_signal, uniforms)
    decided_mask = batch.decisions != NO_ANSWER
    records: Optional[List[TrialRecord]] = None
    if keep_records:
        records = [batch.record(i, agent_index) for i in range(condition.trials_per_agent)]
    return AgentEvaluation(
        fitness=int(batch.correct.sum()),
        decided=int(decided_mask.sum()),
        decision_step_sum=int(batch.decision_steps[decided_mask].sum()),
        records=tuple(records) if records is not None else None,
    )
