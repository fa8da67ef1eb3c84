"""Gate-list circuit IR, lowering to {1q, CX}, and the qubit interaction graph."""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum


class CircuitError(ValueError):
    pass


class GateKind(Enum):
    H = "h"
    X = "x"
    Y = "y"
    Z = "z"
    S = "s"
    SDG = "sdg"
    T = "t"
    TDG = "tdg"
    RX = "rx"
    RY = "ry"
    RZ = "rz"
    CX = "cx"
    CZ = "cz"
    SWAP = "swap"
    CCX = "ccx"
    RZZ = "rzz"
    MEASURE = "measure"
    BARRIER = "barrier"

    @property
    def arity(self) -> int | None:
        """Number of qubit operands; None for BARRIER (any positive count)."""
        if self is GateKind.BARRIER:
            return None
        if self in _TWO_QUBIT:
            return 2
        if self is GateKind.CCX:
            return 3
        return 1

    @property
    def n_params(self) -> int:
        return 1 if self in _PARAMETRIC else 0


_TWO_QUBIT = frozenset({GateKind.CX, GateKind.CZ, GateKind.SWAP, GateKind.RZZ})
_PARAMETRIC = frozenset({GateKind.RX, GateKind.RY, GateKind.RZ, GateKind.RZZ})
SINGLE_QUBIT_UNITARY = frozenset(
    k for k in GateKind
    if k.arity == 1 and k is not GateKind.MEASURE
)
LOWERED_KINDS = SINGLE_QUBIT_UNITARY | {GateKind.CX, GateKind.MEASURE, GateKind.BARRIER}


@dataclass(frozen=True)
class Gate:
    kind: GateKind
    qubits: tuple[int, ...]
    params: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        arity = self.kind.arity
        if arity is None:
            if not self.qubits:
                raise CircuitError("barrier needs at least one qubit")
        elif len(self.qubits) != arity:
            raise CircuitError(
                f"{self.kind.value} takes {arity} qubit(s), got {len(self.qubits)}")
        if len(set(self.qubits)) != len(self.qubits):
            raise CircuitError(f"repeated qubit in {self.kind.value} {self.qubits}")
        if len(self.params) != self.kind.n_params:
            raise CircuitError(
                f"{self.kind.value} takes {self.kind.n_params} parameter(s), got {len(self.params)}")
        if any(q < 0 for q in self.qubits):
            raise CircuitError(f"negative qubit index in {self.qubits}")

    @property
    def is_two_qubit(self) -> bool:
        return self.kind in _TWO_QUBIT

    def __repr__(self):
        p = f"({', '.join(f'{x:g}' for x in self.params)})" if self.params else ""
        return f"{self.kind.name}{p}{self.qubits}"


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    gates: tuple[Gate, ...] = ()
    name: str = "circuit"

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        if self.n_qubits < 1:
            raise CircuitError("circuit needs at least one qubit")
        measured: set[int] = set()
        for i, g in enumerate(self.gates):
            for q in g.qubits:
                if q >= self.n_qubits:
                    raise CircuitError(
                        f"gate {i} {g!r}: qubit {q} out of range for {self.n_qubits} qubits")
            if g.kind is GateKind.MEASURE:
                measured.add(g.qubits[0])
            elif g.kind is not GateKind.BARRIER and measured.intersection(g.qubits):
                raise CircuitError(f"gate {i} {g!r} acts on an already measured qubit")

    def __len__(self):
        return len(self.gates)

    def count_ops(self) -> dict[str, int]:
        return dict(sorted(Counter(g.kind.value for g in self.gates).items()))

    @property
    def two_qubit_count(self) -> int:
        return sum(1 for g in self.gates if g.is_two_qubit)

    @property
    def is_lowered(self) -> bool:
        return all(g.kind in LOWERED_KINDS for g in self.gates)

    def measured_qubits(self) -> list[int]:
        return [g.qubits[0] for g in self.gates if g.kind is GateKind.MEASURE]

    def without_measurements(self) -> Circuit:
        gates = [g for g in self.gates if g.kind not in (GateKind.MEASURE, GateKind.BARRIER)]
        return Circuit(self.n_qubits, gates, self.name)


def _g(kind, *qubits, params=()):
    return Gate(kind, qubits, params)


def _ccx_decomposition(a: int, b: int, c: int) -> list[Gate]:
    """Standard 6-CX Toffoli (controls a, b; target c)."""
    K = GateKind
    return [
        _g(K.H, c),
        _g(K.CX, b, c), _g(K.TDG, c),
        _g(K.CX, a, c), _g(K.T, c),
        _g(K.CX, b, c), _g(K.TDG, c),
        _g(K.CX, a, c), _g(K.T, b), _g(K.T, c), _g(K.H, c),
        _g(K.CX, a, b), _g(K.T, a), _g(K.TDG, b),
        _g(K.CX, a, b),
    ]


def lower_gate(gate: Gate) -> list[Gate]:
    K = GateKind
    q = gate.qubits
    if gate.kind is K.CZ:
        return [_g(K.H, q[1]), _g(K.CX, q[0], q[1]), _g(K.H, q[1])]
    if gate.kind is K.SWAP:
        return [_g(K.CX, q[0], q[1]), _g(K.CX, q[1], q[0]), _g(K.CX, q[0], q[1])]
    if gate.kind is K.RZZ:
        return [_g(K.CX, q[0], q[1]), _g(K.RZ, q[1], params=gate.params), _g(K.CX, q[0], q[1])]
    if gate.kind is K.CCX:
        return _ccx_decomposition(*q)
    return [gate]


def lower(circuit: Circuit) -> Circuit:
    """Rewrite CZ, SWAP, RZZ and CCX into single-qubit gates plus CX."""
    gates: list[Gate] = []
    for g in circuit.gates:
        gates.extend(lower_gate(g))
    return Circuit(circuit.n_qubits, gates, circuit.name)


@dataclass(frozen=True)
class InteractionGraph:
    n_qubits: int
    edge_weights: dict[tuple[int, int], int] = field(default_factory=dict)

    @property
    def total_weight(self) -> int:
        return sum(self.edge_weights.values())

    def weight(self, a: int, b: int) -> int:
        return self.edge_weights.get((min(a, b), max(a, b)), 0)

    def degree(self, q: int) -> int:
        return sum(w for (a, b), w in self.edge_weights.items() if q in (a, b))

    def neighbors(self) -> list[dict[int, int]]:
        adj: list[dict[int, int]] = [{} for _ in range(self.n_qubits)]
        for (a, b), w in self.edge_weights.items():
            adj[a][b] = w
            adj[b][a] = w
        return adj


def interaction_graph(circuit: Circuit) -> InteractionGraph:
    weights: Counter = Counter()
    for i, g in enumerate(circuit.gates):
        if g.kind is GateKind.CX:
            a, b = g.qubits
            weights[(min(a, b), max(a, b))] += 1
        elif g.kind not in LOWERED_KINDS:
            raise CircuitError(
                f"interaction_graph needs a lowered circuit; gate {i} is {g.kind.value}")
    return InteractionGraph(circuit.n_qubits, dict(sorted(weights.items())))


def angle_str(theta: float) -> str:
    """Exact-round-trip text for an angle."""
    if theta == math.pi:
        return "pi"
    if theta == -math.pi:
        return "-pi"
    return repr(float(theta))
