"""TopoCutter: capacity-constrained, noise-aware partition of logical qubits over workers.

A partition is scored by ``alpha * cut_weight + beta * noise``, where the noise term
sums, over used workers, the mean quality score of that worker's best ``|owned|``
qubits. Each point of the qubit-budget sweep gets a greedy graph-growing start and
Kernighan-Lin style refinement (moves and pair swaps, locked passes, best-prefix
rollback).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .circuit import Circuit, GateKind, InteractionGraph, interaction_graph
from .hardware import SystemConfig, VirtualSystemTopology

ALPHA = 1.0
BETA = 10.0
_EPS = 1e-12


class InsufficientQubitsError(ValueError):
    def __init__(self, needed: int, available: int, detail: str = ""):
        self.needed, self.available = needed, available
        self.deficit = needed - available
        msg = (f"insufficient qubits: circuit needs {needed}, "
               f"{detail or 'system provides'} {available} (deficit {self.deficit})")
        super().__init__(msg)


@dataclass(frozen=True)
class Subcircuit:
    worker_id: int
    qubits: tuple[int, ...]
    gate_indices: tuple[int, ...]


@dataclass(frozen=True)
class Partition:
    assignment: tuple[int, ...]
    subcircuits: tuple[Subcircuit, ...]
    cross_gates: tuple[int, ...]
    budget_used: dict[int, int]
    caps: tuple[int, ...] = ()
    cost: dict[str, float] = field(default_factory=dict, compare=False)

    @property
    def n_qubits(self) -> int:
        return len(self.assignment)

    @property
    def workers_used(self) -> tuple[int, ...]:
        return tuple(s.worker_id for s in self.subcircuits)

    def owned(self, worker: int) -> tuple[int, ...]:
        return tuple(q for q, w in enumerate(self.assignment) if w == worker)

    def cut_weight(self, ig: InteractionGraph) -> int:
        return sum(w for (a, b), w in ig.edge_weights.items()
                   if self.assignment[a] != self.assignment[b])

    def to_dict(self, circuit: Circuit | None = None) -> dict:
        out = {
            "assignment": {str(q): w for q, w in enumerate(self.assignment)},
            "budget_used": {str(w): c for w, c in sorted(self.budget_used.items())},
            "caps": list(self.caps),
            "cost": self.cost,
            "cross_gates": [],
        }
        for i in self.cross_gates:
            entry = {"index": i}
            if circuit is not None:
                entry["qubits"] = list(circuit.gates[i].qubits)
            out["cross_gates"].append(entry)
        return out


def make_partition(circuit: Circuit, assignment, caps=(), cost=None) -> Partition:
    assignment = tuple(int(w) for w in assignment)
    if len(assignment) != circuit.n_qubits:
        raise ValueError(f"assignment covers {len(assignment)} qubits, circuit has {circuit.n_qubits}")
    budget: dict[int, int] = {}
    for w in assignment:
        budget[w] = budget.get(w, 0) + 1
    gate_lists: dict[int, list[int]] = {w: [] for w in budget}
    cross = []
    for i, g in enumerate(circuit.gates):
        owners = {assignment[q] for q in g.qubits}
        if len(owners) == 1:
            gate_lists[owners.pop()].append(i)
        elif g.kind is GateKind.CX:
            cross.append(i)
    subs = tuple(
        Subcircuit(w, tuple(q for q, x in enumerate(assignment) if x == w), tuple(gate_lists[w]))
        for w in sorted(budget))
    return Partition(assignment, subs, tuple(cross), dict(sorted(budget.items())),
                     tuple(caps), dict(cost or {}))


def _noise_table(vst: VirtualSystemTopology) -> list[np.ndarray]:
    """table[w][c] = mean quality of worker w's best c qubits (0 for c = 0)."""
    tables = []
    for w in vst.workers:
        scores = np.sort(np.asarray(w.quality))
        prefix = np.concatenate([[0.0], np.cumsum(scores)])
        counts = np.arange(len(prefix))
        counts[0] = 1
        tables.append(prefix / counts)
    return tables


def cut_cost(partition: Partition, ig: InteractionGraph, vst: VirtualSystemTopology,
             alpha: float = ALPHA, beta: float = BETA) -> float:
    return _cost_breakdown(partition.assignment, ig, vst, alpha, beta)["cost"]


def _cost_breakdown(assignment, ig, vst, alpha, beta) -> dict[str, float]:
    tables = _noise_table(vst)
    cut = sum(w for (a, b), w in ig.edge_weights.items() if assignment[a] != assignment[b])
    counts: dict[int, int] = {}
    for w in assignment:
        counts[w] = counts.get(w, 0) + 1
    noise = sum(float(tables[w][c]) for w, c in sorted(counts.items()))
    return {"cut_weight": float(cut), "noise": noise, "alpha": alpha, "beta": beta,
            "cost": alpha * cut + beta * noise}


class _Refiner:
    """Greedy growth plus KL refinement for one capacity vector."""

    def __init__(self, A: np.ndarray, tables, caps, alpha, beta):
        self.A = A
        self.n = A.shape[0]
        self.tables = tables
        self.caps = np.asarray(caps)
        self.alpha, self.beta = alpha, beta
        self.n_workers = len(caps)

    def noise(self, w: int, c: int) -> float:
        return float(self.tables[w][c]) if c > 0 else 0.0

    def worker_order(self) -> list[int]:
        active = [w for w in range(self.n_workers) if self.caps[w] > 0]
        return sorted(active, key=lambda w: (self.noise(w, int(self.caps[w])), w))

    def grow(self, start: int = 0) -> np.ndarray:
        """Fill workers in noise order; ``start`` picks the first seed by degree rank."""
        n, A = self.n, self.A
        degree = A.sum(axis=1)
        order = self.worker_order()
        chosen, room = [], 0
        for w in order:
            chosen.append(w)
            room += int(self.caps[w])
            if room >= n:
                break
        assign = np.full(n, -1)
        by_degree = sorted(range(n), key=lambda v: (-degree[v], v))
        for pos, w in enumerate(chosen):
            free = np.flatnonzero(assign < 0)
            if free.size == 0:
                break
            in_set = np.zeros(n, dtype=bool)
            if pos == 0:
                seed = by_degree[start % n]
            else:
                seed = int(free[np.argmax(degree[free])])
            assign[seed] = w
            in_set[seed] = True
            size = 1
            while size < self.caps[w]:
                free = np.flatnonzero(assign < 0)
                if free.size == 0:
                    break
                to_set = A[free][:, in_set].sum(axis=1)
                to_free = A[free][:, assign < 0].sum(axis=1)
                if to_set.max() <= 0:
                    pick = int(free[np.argmax(degree[free])])
                else:
                    gain = to_set - to_free
                    gain[to_set <= 0] = -np.inf
                    pick = int(free[np.argmax(gain)])
                assign[pick] = w
                in_set[pick] = True
                size += 1
        # leftover vertices (caps of the chosen prefix exhausted) go to any worker with room
        for v in np.flatnonzero(assign < 0):
            counts = np.bincount(assign[assign >= 0], minlength=self.n_workers)
            for w in order:
                if counts[w] < self.caps[w]:
                    assign[v] = w
                    break
        return assign

    def cost(self, assign) -> float:
        cross = self.A * (assign[:, None] != assign[None, :])
        counts = np.bincount(assign, minlength=self.n_workers)
        return (self.alpha * cross.sum() / 2
                + self.beta * sum(self.noise(w, int(c)) for w, c in enumerate(counts)))

    def refine(self, assign: np.ndarray) -> np.ndarray:
        assign = assign.copy()
        while True:
            improved, assign = self._pass(assign)
            if not improved:
                return assign

    def _pass(self, start: np.ndarray) -> tuple[bool, np.ndarray]:
        n, W, A = self.n, self.n_workers, self.A
        assign = start.copy()
        onehot = np.zeros((n, W))
        onehot[np.arange(n), assign] = 1.0
        conn = A @ onehot
        counts = np.bincount(assign, minlength=W)
        locked = np.zeros(n, dtype=bool)
        total, best_total, best_step = 0.0, 0.0, 0
        history: list[tuple[int, int, int]] = []  # (vertex, from, to)
        idx = np.arange(n)
        lower_tri = np.tril(np.ones((n, n), dtype=bool))
        for _ in range(n):
            free = ~locked
            if not free.any():
                break
            own_conn = conn[idx, assign]
            # single moves
            move_delta = np.full((n, W), np.inf)
            for t in range(W):
                if counts[t] >= self.caps[t]:
                    continue
                d_cut = own_conn - conn[:, t]
                d_noise = np.array([
                    self.noise(a, counts[a] - 1) - self.noise(a, counts[a])
                    + self.noise(t, counts[t] + 1) - self.noise(t, counts[t])
                    for a in range(W)])[assign]
                col = self.alpha * d_cut + self.beta * d_noise
                col[(assign == t) | locked] = np.inf
                move_delta[:, t] = col
            mv = np.unravel_index(np.argmin(move_delta), move_delta.shape)
            best_move = move_delta[mv]
            # pair swaps: u -> assign[v], v -> assign[u]
            cross_conn = conn[:, assign]  # cross_conn[u, v] = conn[u, assign[v]]
            d_swap = (own_conn[:, None] - cross_conn) + (own_conn[None, :] - cross_conn.T) + 2 * A
            d_swap = self.alpha * d_swap
            mask = (assign[:, None] == assign[None, :]) | locked[:, None] | locked[None, :]
            mask |= lower_tri
            d_swap[mask] = np.inf
            sw = np.unravel_index(np.argmin(d_swap), d_swap.shape)
            best_swap = d_swap[sw]
            if not np.isfinite(best_move) and not np.isfinite(best_swap):
                break
            if best_swap < best_move - _EPS:
                u, v = int(sw[0]), int(sw[1])
                a, b = int(assign[u]), int(assign[v])
                steps = [(u, a, b), (v, b, a)]
                total += best_swap
            else:
                u, t = int(mv[0]), int(mv[1])
                steps = [(u, int(assign[u]), t)]
                total += best_move
            for v, a, b in steps:
                conn[:, a] -= A[:, v]
                conn[:, b] += A[:, v]
                assign[v] = b
                counts[a] -= 1
                counts[b] += 1
                locked[v] = True
                history.append((v, a, b))
            if total < best_total - _EPS:
                best_total, best_step = total, len(history)
        if best_step == 0:
            return False, start
        result = start.copy()
        for v, _, b in history[:best_step]:
            result[v] = b
        return True, result


def _interaction_matrix(ig: InteractionGraph) -> np.ndarray:
    A = np.zeros((ig.n_qubits, ig.n_qubits))
    for (a, b), w in ig.edge_weights.items():
        A[a, b] = A[b, a] = w
    return A


def sweep_caps(capacities: dict[int, int], n_qubits: int) -> list[tuple[int, ...]]:
    """Distinct per-worker caps for sq = n_qubits .. sum(capacities), single-worker fits first.

    ``capacities`` maps worker id -> capacity for the workers eligible in this sweep;
    returned vectors are indexed by worker id over ``max(capacities) + 1`` slots.
    """
    size = max(capacities) + 1
    total = sum(capacities.values())
    seen, out = set(), []

    def add(vec):
        vec = tuple(vec)
        if vec not in seen and sum(vec) >= n_qubits:
            seen.add(vec)
            out.append(vec)

    for w, cap in sorted(capacities.items()):
        if cap >= n_qubits:
            vec = [0] * size
            vec[w] = cap
            add(vec)
    for sq in range(n_qubits, total + 1):
        vec = [0] * size
        for w, cap in capacities.items():
            vec[w] = min(cap, math.ceil(sq * cap / total))
        add(vec)
    return out


def topo_cutter_sweep(circuit: Circuit, vst: VirtualSystemTopology,
                      alpha: float = ALPHA, beta: float = BETA,
                      workers: tuple[int, ...] | None = None,
                      starts: int = 4) -> list[Partition]:
    """Refined partition for every distinct point of the qubit-budget sweep.

    The sweep runs separately inside every group of EPR-connected workers large
    enough to hold the circuit (or only over ``workers`` when given). Partitions are
    returned in sweep order with duplicates removed.
    """
    if not circuit.is_lowered:
        raise ValueError("topo_cutter needs a lowered circuit")
    n = circuit.n_qubits
    total = sum(w.n_qubits for w in vst.workers)
    if n > total:
        raise InsufficientQubitsError(n, total, "the virtual system topology provides")
    groups = [workers] if workers is not None else vst.components
    groups = [g for g in groups if sum(vst.workers[w].n_qubits for w in g) >= n]
    if not groups:
        largest = max(sum(vst.workers[w].n_qubits for w in g) for g in vst.components)
        raise InsufficientQubitsError(n, largest, "the largest EPR-connected worker group has")
    ig = interaction_graph(circuit)
    A = _interaction_matrix(ig)
    tables = _noise_table(vst)
    out: list[Partition] = []
    seen = set()
    for group in groups:
        capacities = {w: vst.workers[w].n_qubits for w in group}
        for caps in sweep_caps(capacities, n):
            caps = tuple(caps) + (0,) * (len(vst.workers) - len(caps))
            ref = _Refiner(A, tables, caps, alpha, beta)
            assign, best = None, math.inf
            for start in range(min(n, starts)):
                cand = ref.refine(ref.grow(start))
                c = ref.cost(cand)
                if c < best - _EPS:
                    assign, best = cand, c
            key = tuple(int(w) for w in assign)
            if key in seen:
                continue
            seen.add(key)
            out.append(make_partition(circuit, key, caps,
                                      _cost_breakdown(key, ig, vst, alpha, beta)))
    return out


def topo_cutter(circuit: Circuit, vst: VirtualSystemTopology, config: SystemConfig | None = None,
                alpha: float = ALPHA, beta: float = BETA) -> Partition:
    """Lowest-cost partition over the qubit-budget sweep (first one wins ties)."""
    return best_partition(topo_cutter_sweep(circuit, vst, alpha, beta))


def best_partition(partitions: list[Partition]) -> Partition:
    best = partitions[0]
    for p in partitions[1:]:
        if p.cost["cost"] < best.cost["cost"] - _EPS:
            best = p
    return best
