"""Plan scoring and verification: ESP fidelity, legality checks, equivalence and Monte-Carlo oracles."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .circuit import Circuit, GateKind
from .hardware import SystemConfig
from .simulator import apply_gate, apply_pauli, equal_up_to_phase, statevector, zero_state

K = GateKind
ORACLE_MAX_QUBITS = 14
MC_MAX_QUBITS = 10
_MAX_SLOTS = 20


class FidelityError(ValueError):
    pass


class OracleError(ValueError):
    pass


@dataclass(frozen=True)
class FidelityEstimate:
    f: float
    factors: dict[str, float]


def _sr(config: SystemConfig, vst, a: int, b: int) -> float:
    (wa, qa), (wb, qb) = vst.node_tags[a], vst.node_tags[b]
    return config.sr_for(wa, qa, wb, qb)


def _err_2q(config: SystemConfig, vst, a: int, b: int) -> float:
    (wa, qa), (wb, qb) = vst.node_tags[a], vst.node_tags[b]
    if wa != wb:
        raise FidelityError(f"nodes {a}, {b} are on different workers but not an EPR edge")
    try:
        return config.workers[wa].err_2q[(min(qa, qb), max(qa, qb))]
    except KeyError:
        raise FidelityError(f"worker {wa} has no calibration for edge {qa}-{qb}") from None


def _error_events(plan, config: SystemConfig) -> list[tuple[str, float, tuple[int, ...], int]]:
    """(channel, failure probability, physical qubits, gate position) per error event."""
    vst = plan.vst
    events = []
    for pos, g in enumerate(plan.routing.gates):
        if g.kind is K.BARRIER:
            continue
        if g.kind is K.MEASURE:
            w, q = vst.node_tags[g.qubits[0]]
            events.append(("readout", config.workers[w].err_readout[q], g.qubits, pos))
        elif len(g.qubits) == 1:
            w, q = vst.node_tags[g.qubits[0]]
            events.append(("single_qubit", config.workers[w].err_1q[q], g.qubits, pos))
        else:
            a, b = g.qubits
            reps = 3 if g.kind is K.SWAP else 1
            if vst.is_epr_edge(a, b):
                channel, p = "epr", 1.0 - _sr(config, vst, a, b)
            else:
                channel, p = "two_qubit", _err_2q(config, vst, a, b)
            events += [(channel, p, g.qubits, pos)] * reps
    return events


def estimate_fidelity(plan, config: SystemConfig) -> FidelityEstimate:
    """Product of per-event survival probabilities (SWAP = 3 CX, SR per EPR use)."""
    factors = {"single_qubit": 1.0, "two_qubit": 1.0, "readout": 1.0, "epr": 1.0}
    for channel, p, _, _ in _error_events(plan, config):
        factors[channel] *= 1.0 - p
    f = factors["single_qubit"] * factors["two_qubit"] * factors["readout"] * factors["epr"]
    return FidelityEstimate(f, factors)


@dataclass(frozen=True)
class Violation:
    kind: str
    detail: str
    gate_index: int | None = None


def check_constraints(plan) -> list[Violation]:
    out: list[Violation] = []
    vst, part, routing, circuit = plan.vst, plan.partition, plan.routing, plan.circuit
    for i, g in enumerate(routing.gates):
        if len(g.qubits) == 2 and g.kind is not K.BARRIER and not vst.is_edge(*g.qubits):
            out.append(Violation("NonAdjacentGate",
                                 f"{g.kind.value} on nodes {g.qubits} is not a VST edge", i))
        if g.swap != (g.kind is K.SWAP):
            out.append(Violation("SwapTagMismatch", f"gate {i} tag disagrees with its kind", i))
    if len(part.assignment) != circuit.n_qubits:
        out.append(Violation("UnassignedQubit",
                             f"{circuit.n_qubits - len(part.assignment)} logical qubit(s) unassigned"))
    for w, used in part.budget_used.items():
        cap = vst.workers[w].n_qubits
        if used > cap:
            out.append(Violation("CapacityExceeded", f"worker {w} holds {used} > capacity {cap}"))
    for name, layout in (("initial", routing.initial_layout), ("final", routing.final_layout)):
        l2p = layout.l2p
        if len(set(l2p)) != len(l2p) or len(l2p) != circuit.n_qubits:
            out.append(Violation("LayoutNotBijective", f"{name} layout {l2p}"))
        if any(not 0 <= p < vst.n_nodes for p in l2p):
            out.append(Violation("LayoutOutOfRange", f"{name} layout uses a node outside the VST"))
    for q, p in enumerate(routing.initial_layout.l2p):
        if q < len(part.assignment) and 0 <= p < vst.n_nodes and vst.worker_of(p) != part.assignment[q]:
            out.append(Violation("LayoutWorkerMismatch",
                                 f"logical {q} starts on worker {vst.worker_of(p)}, "
                                 f"assigned to worker {part.assignment[q]}"))
    tags = sum(1 for g in routing.gates if g.kind is K.SWAP)
    per_worker = sum(routing.swap_table.values())
    recount = sum(sum(1 for g in m.gates if g.swap) for m in routing.mapped)
    if not (plan.so == routing.total_so == per_worker == tags == recount):
        out.append(Violation("OverheadMismatch",
                             f"SO={plan.so}, total_so={routing.total_so}, table sum={per_worker}, "
                             f"SWAP tags={tags}, per-subcircuit recount={recount}"))
    for m in routing.mapped:
        if m.swap_count != sum(1 for g in m.gates if g.swap):
            out.append(Violation("OverheadMismatch", f"worker {m.worker_id} swap_count disagrees"))
    epr = sum(g.epr_uses for g in routing.gates)
    if epr != routing.epr_uses:
        out.append(Violation("EprUseMismatch", f"epr_uses={routing.epr_uses}, recount={epr}"))
    emitted = sorted(g.source for g in routing.gates if g.source >= 0)
    if emitted != list(range(len(circuit.gates))):
        out.append(Violation("GateSetMismatch", "routed gates do not cover the circuit exactly once"))
    return out


class _SlotState:
    """Statevector over only the physical nodes a routed circuit actually touches.

    Nodes never touched by a non-SWAP gate stay |0>; a SWAP between an occupied and
    a pristine node just moves the slot label.
    """

    def __init__(self, initial_nodes):
        self.slot = {p: i for i, p in enumerate(initial_nodes)}
        self.n = len(self.slot)
        self.psi = zero_state(self.n)

    def _ensure(self, p: int) -> int:
        if p not in self.slot:
            if self.n >= _MAX_SLOTS:
                raise OracleError(f"routed circuit touches more than {_MAX_SLOTS} nodes")
            self.slot[p] = self.n
            self.n += 1
            self.psi = np.stack([self.psi, np.zeros_like(self.psi)], axis=-1)
        return self.slot[p]

    def apply(self, kind, nodes, params=()):
        if kind in (K.MEASURE, K.BARRIER):
            return
        if kind is K.SWAP:
            a, b = nodes
            if a in self.slot and b not in self.slot:
                self.slot[b] = self.slot.pop(a)
                return
            if b in self.slot and a not in self.slot:
                self.slot[a] = self.slot.pop(b)
                return
            if a not in self.slot and b not in self.slot:
                return
        slots = [self._ensure(p) for p in nodes]
        self.psi = apply_gate(self.psi, kind, slots, params)

    def pauli(self, paulis, nodes):
        slots = [self._ensure(p) for p in nodes]
        self.psi = apply_pauli(self.psi, paulis, slots)

    def logical_state(self, final_l2p) -> np.ndarray:
        order = [self._ensure(p) for p in final_l2p]
        rest = [s for s in range(self.n) if s not in order]
        return np.transpose(self.psi, order + rest).reshape(-1)


def _routed_state(plan, gates=None) -> tuple[np.ndarray, int]:
    routing = plan.routing
    state = _SlotState(routing.initial_layout.l2p)
    for g in (routing.gates if gates is None else gates):
        state.apply(g.kind, g.qubits, g.params)
    psi = state.logical_state(routing.final_layout.l2p)
    return psi, state.n - plan.circuit.n_qubits


def equivalence_oracle(original: Circuit, plan, tol: float = 1e-9) -> bool:
    """Routed plan, read through its final layout, equals ``original`` up to global phase."""
    if original.n_qubits > ORACLE_MAX_QUBITS:
        raise OracleError(f"oracle limited to {ORACLE_MAX_QUBITS} qubits, got {original.n_qubits}")
    try:
        routed, extra = _routed_state(plan)
    except OracleError:
        return False
    expected = statevector(original)
    if extra:
        pad = np.zeros(2 ** extra, dtype=complex)
        pad[0] = 1.0
        expected = np.kron(expected, pad)
    return equal_up_to_phase(expected, routed, tol)


@dataclass(frozen=True)
class MonteCarloResult:
    fidelity: float
    stderr: float
    no_failure: float
    no_failure_stderr: float
    shots: int
    analytic_no_failure: float


def monte_carlo_fidelity(plan, config: SystemConfig, shots: int = 100_000, seed: int = 0,
                         chunk: int = 10_000) -> MonteCarloResult:
    """Stochastic Pauli error injection on the routed circuit.

    Each event fails independently: gate events apply a uniformly random
    non-identity Pauli on their operands, EPR uses fail with 1 - SR the same way,
    and a readout failure scores the shot 0. A shot's score is the overlap
    |<ideal|noisy>|^2 of its final state with the noiseless one.
    """
    if shots <= 0:
        raise ValueError("shots must be positive")
    if plan.circuit.n_qubits > MC_MAX_QUBITS:
        raise OracleError(f"Monte-Carlo limited to {MC_MAX_QUBITS} qubits, "
                          f"got {plan.circuit.n_qubits}")
    events = _error_events(plan, config)
    probs = np.array([p for _, p, _, _ in events])
    is_readout = np.array([c == "readout" for c, _, _, _ in events], dtype=bool)
    analytic = float(np.prod(1.0 - probs)) if len(probs) else 1.0

    gates = plan.routing.gates
    # ideal prefix states: prefix[k] = state after routed gates[:k]
    prefix = []
    state = _SlotState(plan.routing.initial_layout.l2p)
    for g in gates:
        prefix.append((dict(state.slot), state.psi))
        state.apply(g.kind, g.qubits, g.params)
    prefix.append((dict(state.slot), state.psi))
    ideal_final = state

    memo: dict[tuple, float] = {}

    def shot_score(pattern: tuple) -> float:
        if pattern not in memo:
            memo[pattern] = _pattern_overlap(pattern, events, gates, prefix, ideal_final)
        return memo[pattern]

    ss = np.random.SeedSequence(seed)
    total = total_sq = ok = 0.0
    done = 0
    for child in ss.spawn(math.ceil(shots / chunk)):
        m = min(chunk, shots - done)
        rng = np.random.Generator(np.random.PCG64(child))
        if len(probs):
            fails = rng.random((m, len(probs))) < probs
        else:
            fails = np.zeros((m, 0), dtype=bool)
        clean = ~fails.any(axis=1)
        ok += clean.sum()
        scores = clean.astype(float)
        dirty = np.flatnonzero(~clean & ~(fails & is_readout).any(axis=1))
        for row in dirty:
            idx = np.flatnonzero(fails[row])
            pattern = tuple(
                (int(e), int(rng.integers(1, 4 ** len(events[e][2]))))
                for e in idx)
            scores[row] = shot_score(pattern)
        total += scores.sum()
        total_sq += (scores ** 2).sum()
        done += m
    mean = total / shots
    var = max(total_sq / shots - mean ** 2, 0.0)
    p_ok = ok / shots
    return MonteCarloResult(
        fidelity=float(mean), stderr=math.sqrt(var / shots),
        no_failure=float(p_ok), no_failure_stderr=math.sqrt(p_ok * (1 - p_ok) / shots),
        shots=shots, analytic_no_failure=analytic)


def _pauli_digits(code: int, width: int) -> list[int]:
    return [(code >> (2 * (width - 1 - i))) & 3 for i in range(width)]


def _pattern_overlap(pattern, events, gates, prefix, ideal_final) -> float:
    """|<ideal|noisy>|^2 with Paulis inserted after the gates named in ``pattern``."""
    by_pos: dict[int, list[tuple[list[int], tuple[int, ...]]]] = {}
    for e, code in pattern:
        _, _, nodes, pos = events[e]
        by_pos.setdefault(pos, []).append((_pauli_digits(code, len(nodes)), nodes))
    first, last = min(by_pos), max(by_pos)
    slot, psi = prefix[first + 1]
    state = _SlotState(())
    state.slot, state.psi, state.n = dict(slot), psi, psi.ndim
    for pos in range(first, last + 1):
        if pos > first:
            g = gates[pos]
            state.apply(g.kind, g.qubits, g.params)
        for paulis, nodes in by_pos.get(pos, ()):
            state.pauli(paulis, nodes)
    ref_slot, ref_psi = prefix[last + 1]
    # align slot labels of the noisy state with the ideal state at the same position
    nodes = sorted(ref_slot, key=ref_slot.get)
    extra = [p for p in state.slot if p not in ref_slot]
    order = [state.slot[p] for p in nodes] + [state.slot[p] for p in extra]
    noisy = np.transpose(state.psi, order)
    if extra:
        noisy = noisy[(Ellipsis,) + (0,) * len(extra)]
    return float(abs(np.vdot(ref_psi.reshape(-1), noisy.reshape(-1))) ** 2)
