from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from evodm.brain.base import NODE_COUNT, Brain, Source

# Answer codes used by the batched kernel
NO_ANSWER = 0
ANSWER_S = 1
ANSWER_N = 2


@dataclass(frozen=True, eq=False)
class NodeState:
    """The 16 binary node values of a brain. ``node(i)`` is 1-based, ``bits`` is 0-based."""

    bits: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.bits, dtype=np.uint8, copy=True).reshape(-1)
        if arr.size != NODE_COUNT:
            raise ValueError(f"NodeState needs exactly {NODE_COUNT} bits, got {arr.size}")
        if arr.max(initial=0) > 1:
            raise ValueError("NodeState bits must be 0 or 1")
        arr.setflags(write=False)
        object.__setattr__(self, "bits", arr)

    @classmethod
    def zeros(cls) -> "NodeState":
        return cls(np.zeros(NODE_COUNT, dtype=np.uint8))

    def node(self, index: int) -> int:
        return int(self.bits[index - 1])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, NodeState):
            return NotImplemented
        return bool(np.array_equal(self.bits, other.bits))

    def __hash__(self) -> int:
        return hash(self.bits.tobytes())


def step_batch(brain: Brain, states: np.ndarray, inputs: np.ndarray) -> np.ndarray:
    """Advance a batch of node states by one synchronous update.

    ``states`` is (T, 16) and ``inputs`` is (T, 2). Input bits are written first, every gate then
    reads the same pre-update state, and gate outputs are OR-combined into an otherwise zero next
    state. Input nodes of the next state keep the written bits.
    """
    t = states.shape[0]
    work = states.copy()
    work[:, :2] = inputs
    nxt = np.zeros((t, NODE_COUNT), dtype=np.uint8)
    compiled = brain.compiled
    g = compiled.gate_count
    if g:
        values = work[:, compiled.input_index].astype(np.intp)  # (T, G, 4)
        rows = (values * compiled.row_weights).sum(axis=2)  # (T, G)
        out = compiled.tables[np.arange(g)[None, :], rows]  # (T, G, 4)
        nxt = ((out.reshape(t, -1).astype(np.int32) @ compiled.scatter) > 0).astype(np.uint8)
    nxt[:, :2] = inputs
    return nxt


def answer_codes(states: np.ndarray) -> np.ndarray:
    """Vectorised ``read_answer``: (T, 16) states to answer codes."""
    left, right = states[:, 14], states[:, 15]
    codes = np.full(states.shape[0], NO_ANSWER, dtype=np.int8)
    codes[(left == 0) & (right == 1)] = ANSWER_S
    codes[(left == 1) & (right == 0)] = ANSWER_N
    return codes


def step(brain: Brain, state: NodeState, input_bits: Tuple[int, int]) -> NodeState:
    nxt = step_batch(brain, state.bits[None, :], np.asarray([input_bits], dtype=np.uint8))
    return NodeState(nxt[0])


def read_answer(state: NodeState) -> Optional[Source]:
    pair = (state.node(15), state.node(16))
    if pair == (0, 1):
        return Source.S
    if pair == (1, 0):
        return Source.N
    return None


def run_constant_input(brain: Brain, input_bits: Sequence[int], max_steps: int) -> Tuple[int, int]:
    """Drive a brain from the zero state with a constant input until a state repeats.

    Returns ``(first_index, period)`` of the reached cycle.
    """
    seen: Dict[bytes, int] = {}
    state = NodeState.zeros()
    bits = (int(input_bits[0]), int(input_bits[1]))
    for i in range(max_steps):
        key = state.bits.tobytes()
        if key in seen:
            return seen[key], i - seen[key]
        seen[key] = i
        state = step(brain, state, bits)
    raise RuntimeError(f"No cycle found within {max_steps} steps")
