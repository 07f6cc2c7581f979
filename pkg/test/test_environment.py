from pathlib import Path

import numpy as np
import pytest

from evodm.brain import Brain, Gate, Source
from evodm.environment import (
    Condition,
    TrialRecord,
    bits_from_uniforms,
    evaluate_agent,
    ramp_frequency,
    ramp_schedule,
    read_records,
    run_trial,
    sample_input,
    write_records,
)

COPIER = Brain(
    gates=(
        Gate(inputs=(1,), outputs=(15,), table=((0,), (1,))),
        Gate(inputs=(2,), outputs=(16,), table=((0,), (1,))),
    )
)
# Node 16 is always on and node 15 always off, i.e. the brain always answers S
ALWAYS_S = Brain(gates=(Gate(inputs=(1,), outputs=(16,), table=((1,), (1,))),))


def _symbol_frequencies(bits: np.ndarray) -> dict:
    codes = bits[:, 0] * 2 + bits[:, 1]
    counts = np.bincount(codes, minlength=4) / codes.size
    return {"00": counts[0], "01": counts[1], "10": counts[2], "11": counts[3]}


def test_ramp_frequency() -> None:
    assert ramp_frequency(0, 0.9) == pytest.approx(0.5)
    assert ramp_frequency(5, 0.60) == pytest.approx(0.55)
    assert ramp_frequency(39, 0.9) == pytest.approx(0.89)
    assert ramp_frequency(40, 0.9) == pytest.approx(0.9)
    assert ramp_frequency(99, 0.9) == pytest.approx(0.9)
    with pytest.raises(ValueError):
        ramp_frequency(0, 0.4)


def test_ramp_schedule_is_monotone_and_capped() -> None:
    schedule = ramp_schedule(100, 0.75)
    assert schedule.shape == (100,)
    assert np.all(np.diff(schedule) >= 0)
    assert schedule.max() == pytest.approx(0.75)


@pytest.mark.parametrize(
    "freq,expected",
    [
        (0.9, {"01": 0.81, "00": 0.09, "11": 0.09, "10": 0.01}),
        (0.6, {"01": 0.36, "00": 0.24, "11": 0.24, "10": 0.16}),
    ],
)
def test_signal_symbol_frequencies(freq: float, expected: dict) -> None:
    rng = np.random.default_rng(0)
    n = 1_000_000
    bits = bits_from_uniforms(np.ones(n, dtype=bool), np.full(n, freq), rng.random((n, 2)))
    observed = _symbol_frequencies(bits)
    for symbol, p in expected.items():
        assert abs(observed[symbol] - p) < 0.003


def test_noise_is_the_mirror_of_signal() -> None:
    rng = np.random.default_rng(1)
    n = 1_000_000
    signal = _symbol_frequencies(bits_from_uniforms(np.ones(n, dtype=bool), np.full(n, 0.7), rng.random((n, 2))))
    noise = _symbol_frequencies(bits_from_uniforms(np.zeros(n, dtype=bool), np.full(n, 0.7), rng.random((n, 2))))
    mirror = {"01": "10", "10": "01", "00": "00", "11": "11"}
    for symbol in signal:
        assert abs(signal[symbol] - noise[mirror[symbol]]) < 0.003


def test_sample_input() -> None:
    rng = np.random.default_rng(2)
    assert {sample_input(Source.S, 1.0, rng) for _ in range(50)} == {"01"}
    assert {sample_input(Source.N, 1.0, rng) for _ in range(50)} == {"10"}
    assert {sample_input(Source.S, 0.5, rng) for _ in range(400)} == {"00", "01", "10", "11"}
    with pytest.raises(ValueError):
        sample_input(Source.S, 0.3, rng)


def test_condition_validation_and_label() -> None:
    assert Condition(0.9, 40).label == "f0.90_t40"
    with pytest.raises(ValueError):
        Condition(0.5, 40)
    with pytest.raises(ValueError):
        Condition(0.9, 100)
    with pytest.raises(ValueError):
        Condition(0.9, 10, trials_per_agent=0)


def test_trial_record_invariants() -> None:
    with pytest.raises(ValueError):
        TrialRecord(source=Source.S, inputs=("01",), decision_step=0, decision=Source.S, correct=False)
    with pytest.raises(ValueError):
        TrialRecord(source=Source.S, inputs=("01",), decision_step=None, decision=Source.S, correct=True)
    with pytest.raises(ValueError):
        TrialRecord(source=Source.S, inputs=("21",), decision_step=None, decision=None, correct=False)


def test_copier_trial_decides_on_first_informative_input() -> None:
    condition = Condition(0.9, 10)
    rng = np.random.default_rng(3)
    for source in (Source.S, Source.N) * 20:
        record = run_trial(COPIER, condition, source, rng)
        assert record.decision_step is not None
        assert record.decision_step >= 10
        assert len(record.inputs) == record.decision_step + 1
        last = record.inputs[-1]
        assert last in ("01", "10")
        assert record.decision is (Source.S if last == "01" else Source.N)
        assert all(s in ("00", "11") for s in record.inputs[10:-1])
        assert record.correct == (record.decision is source)


def test_answers_before_nondecision_time_are_ignored() -> None:
    condition = Condition(0.9, 40, trials_per_agent=50)
    evaluation = evaluate_agent(ALWAYS_S, condition, np.random.default_rng(4), keep_records=True)
    assert evaluation.records is not None
    assert all(r.decision_step == 40 for r in evaluation.records)
    assert evaluation.mean_decision_step == 40


def test_always_s_scores_about_half() -> None:
    condition = Condition(0.9, 10)
    evaluation = evaluate_agent(ALWAYS_S, condition, np.random.default_rng(5))
    assert abs(evaluation.fitness - 50) <= 15
    assert evaluation.decided == 100


def test_empty_brain_never_decides() -> None:
    condition = Condition(0.75, 20)
    evaluation = evaluate_agent(Brain(), condition, np.random.default_rng(6), keep_records=True)
    assert evaluation.fitness == 0
    assert evaluation.decided == 0
    assert evaluation.mean_decision_step is None
    assert evaluation.records is not None
    assert all(len(r.inputs) == condition.max_steps and r.decision is None for r in evaluation.records)


def test_copier_is_accurate_on_easy_condition() -> None:
    condition = Condition(0.9, 40, trials_per_agent=500)
    evaluation = evaluate_agent(COPIER, condition, np.random.default_rng(7))
    assert evaluation.fitness / 500 >= 0.9


def test_evaluate_agent_is_reproducible() -> None:
    condition = Condition(0.6, 15)
    a = evaluate_agent(COPIER, condition, np.random.default_rng(8), keep_records=True)
    b = evaluate_agent(COPIER, condition, np.random.default_rng(8), keep_records=True)
    assert a == b


def test_records_round_trip_through_ndjson(tmp_path: Path) -> None:
    condition = Condition(0.8, 10, trials_per_agent=20)
    evaluation = evaluate_agent(COPIER, condition, np.random.default_rng(9), keep_records=True, agent_index=3)
    assert evaluation.records is not None
    path = str(tmp_path / "records.jsonl")
    write_records(path, evaluation.records)
    assert tuple(read_records(path)) == evaluation.records


if __name__ == "__main__":
    test_copier_trial_decides_on_first_informative_input()
    test_always_s_scores_about_half()
