import json
from typing import Any, Dict, Iterable, List

from evodm.brain.base import Source
from evodm.environment.base import TrialRecord


def record_to_dict(record: TrialRecord) -> Dict[str, Any]:
    out: Dict[str, Any] = {
        "source": record.source.value,
        "inputs": "".join(record.inputs),
        "decision_step": record.decision_step,
        "decision": record.decision.value if record.decision is not None else None,
        "correct": record.correct,
    }
    if record.agent_index is not None:
        out["agent_index"] = record.agent_index
    return out


def record_from_dict(data: Dict[str, Any]) -> TrialRecord:
    raw = data["inputs"]
    if len(raw) % 2:
        raise ValueError(f"Input string has odd length: {raw!r}")
    return TrialRecord(
        source=Source(data["source"]),
        inputs=tuple(raw[i : i + 2] for i in range(0, len(raw), 2)),
        decision_step=data.get("decision_step"),
        decision=Source(data["decision"]) if data.get("decision") is not None else None,
        correct=bool(data["correct"]),
        agent_index=data.get("agent_index"),
    )


def write_records(path: str, records: Iterable[TrialRecord]) -> None:
    with open(path, "w") as f:
        for record in records:
            f.write(json.dumps(record_to_dict(record)) + "\n")


def read_records(path: str) -> List[TrialRecord]:
    with open(path) as f:
        return [record_from_dict(json.loads(line)) for line in f if line.strip()]
