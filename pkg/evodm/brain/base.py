import enum
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import List, Set, Tuple

import numpy as np

from evodm.genome.base import START_CODON, Genome, find_gene_starts

NODE_COUNT = 16
INPUT_NODES = (1, 2)
OUTPUT_NODES = (15, 16)
MAX_GATE_ARITY = 4


class Source(enum.Enum):
    """The two stimulus sources, which are also the two answers a brain can signal."""

    S = "S"
    N = "N"

    @property
    def mirrored(self) -> "Source":
        return Source.N if self is Source.S else Source.S


@dataclass(frozen=True)
class Gate:
    """A deterministic logic gate over 1-based node indices.

    ``table[r]`` holds the output bits for input row ``r``, where ``inputs[0]`` is the most
    significant bit of ``r``.
    """

    inputs: Tuple[int, ...]
    outputs: Tuple[int, ...]
    table: Tuple[Tuple[int, ...], ...]

    def __post_init__(self) -> None:
        if not 1 <= len(self.inputs) <= MAX_GATE_ARITY or not 1 <= len(self.outputs) <= MAX_GATE_ARITY:
            raise ValueError(f"Gate arity out of range: {len(self.inputs)} in, {len(self.outputs)} out")
        for node in (*self.inputs, *self.outputs):
            if not 1 <= node <= NODE_COUNT:
                raise ValueError(f"Gate node index out of range: {node}")
        if len(self.table) != 2 ** len(self.inputs) or any(len(row) != len(self.outputs) for row in self.table):
            raise ValueError("Gate table shape does not match its arity")

    @property
    def connections(self) -> int:
        return len(self.inputs) * len(self.outputs)


@dataclass(frozen=True)
class CompiledBrain:
    """Padded array form of a brain, used by the vectorised update."""

    input_index: np.ndarray  # (G, 4) 0-based node indices, padding points at node 0
    row_weights: np.ndarray  # (G, 4) 2**k place values, 0 for padding
    tables: np.ndarray  # (G, 16, 4) output bits, zero padded
    scatter: np.ndarray  # (G * 4, 16) one-hot map from gate output slots to nodes

    @property
    def gate_count(self) -> int:
        return int(self.input_index.shape[0])


@dataclass(frozen=True)
class Brain:
    gates: Tuple[Gate, ...] = ()
    node_count: int = field(default=NODE_COUNT, init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "gates", tuple(self.gates))

    @cached_property
    def compiled(self) -> CompiledBrain:
        g = len(self.gates)
        input_index = np.zeros((g, MAX_GATE_ARITY), dtype=np.intp)
        row_weights = np.zeros((g, MAX_GATE_ARITY), dtype=np.intp)
        tables = np.zeros((g, 2**MAX_GATE_ARITY, MAX_GATE_ARITY), dtype=np.uint8)
        scatter = np.zeros((g * MAX_GATE_ARITY, NODE_COUNT), dtype=np.int32)
        for i, gate in enumerate(self.gates):
            n_in, n_out = len(gate.inputs), len(gate.outputs)
            input_index[i, :n_in] = [node - 1 for node in gate.inputs]
            row_weights[i, :n_in] = [1 << (n_in - 1 - j) for j in range(n_in)]
            tables[i, : 2**n_in, :n_out] = np.asarray(gate.table, dtype=np.uint8)
            for j, node in enumerate(gate.outputs):
                scatter[i * MAX_GATE_ARITY + j, node - 1] = 1
        return CompiledBrain(input_index, row_weights, tables, scatter)

    def nodes_used(self) -> Set[int]:
        return {node for gate in self.gates for node in (*gate.inputs, *gate.outputs)}


def _address_to_node(u: int, v: int) -> int:
    return (((u - 1) * 4 + (v - 1)) % NODE_COUNT) + 1


def _remap_output(node: int) -> int:
    # Input nodes belong to the environment; gates writing there are redirected to hidden nodes
    if node in INPUT_NODES:
        return ((node - 1) % 14) + 3
    return node


def decode_gene(genome: Genome, start: int) -> Gate:
    """Decode the gate whose start codon begins at ``start``."""
    pos = start + len(START_CODON)
    a, b = (int(x) for x in genome.circular_take(pos, 2))
    n_in, n_out = ((a - 1) % 4) + 1, ((b - 1) % 4) + 1
    pos += 2

    addresses = genome.circular_take(pos, 2 * (n_in + n_out)).astype(int)
    pos += 2 * (n_in + n_out)
    nodes = [_address_to_node(addresses[2 * k], addresses[2 * k + 1]) for k in range(n_in + n_out)]
    inputs = tuple(nodes[:n_in])
    outputs = tuple(_remap_output(node) for node in nodes[n_in:])

    bits = (genome.circular_take(pos, (2**n_in) * n_out) % 2).reshape(2**n_in, n_out)
    table = tuple(tuple(int(x) for x in row) for row in bits)
    return Gate(inputs=inputs, outputs=outputs, table=table)


def decode(genome: Genome) -> Brain:
    """Decode every gene of ``genome`` into a gate, in start-position order."""
    return Brain(gates=tuple(decode_gene(genome, p) for p in find_gene_starts(genome)))


def connection_count(brain: Brain) -> int:
    return sum(gate.connections for gate in brain.gates)


def dump_brain(brain: Brain) -> str:
    lines: List[str] = []
    for gate in brain.gates:
        rows = ";".join("".join(str(bit) for bit in row) for row in gate.table)
        ins = ",".join(str(n) for n in gate.inputs)
        outs = ",".join(str(n) for n in gate.outputs)
        lines.append(f"in=[{ins}] out=[{outs}] table=[{rows}]")
    return "\n".join(lines)


_GATE_LINE = re.compile(r"^in=\[([\d,]*)\] out=\[([\d,]*)\] table=\[([01;]*)\]$")


def brain_from_dump(text: str) -> Brain:
    gates = []
    for line in text.strip().splitlines():
        if not line.strip():
            continue
        match = _GATE_LINE.match(line.strip())
        if match is None:
            raise ValueError(f"Malformed gate line: {line!r}")
        ins, outs, rows = match.groups()
        gates.append(
            Gate(
                inputs=tuple(int(x) for x in ins.split(",")),
                outputs=tuple(int(x) for x in outs.split(",")),
                table=tuple(tuple(int(c) for c in row) for row in rows.split(";")),
            )
        )
    return Brain(gates=tuple(gates))
