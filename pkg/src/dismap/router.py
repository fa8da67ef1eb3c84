"""SubMapper: noise-aware initial layout and SABRE-style SWAP routing over a VST."""
from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .circuit import Circuit, GateKind, InteractionGraph, interaction_graph
from .cutter import Partition
from .hardware import VirtualSystemTopology

W_EPR = 3.0
EXTENDED_SIZE = 20
EXTENDED_WEIGHT = 0.5
DECAY_DELTA = 0.001
DECAY_RESET = 5
EMBED_BUDGET = 20000


class RoutingError(RuntimeError):
    def __init__(self, message: str, gate_index: int | None = None):
        self.gate_index = gate_index
        super().__init__(message)


@dataclass(frozen=True)
class Layout:
    l2p: tuple[int, ...]

    def __post_init__(self):
        if len(set(self.l2p)) != len(self.l2p):
            raise ValueError(f"layout is not injective: {self.l2p}")

    @property
    def p2l(self) -> dict[int, int]:
        return {p: q for q, p in enumerate(self.l2p)}

    def __getitem__(self, q: int) -> int:
        return self.l2p[q]

    def __len__(self):
        return len(self.l2p)


@dataclass(frozen=True)
class RouterOptions:
    w_epr: float = W_EPR
    extended_size: int = EXTENDED_SIZE
    extended_weight: float = EXTENDED_WEIGHT
    decay_delta: float = DECAY_DELTA
    decay_reset: int = DECAY_RESET


@dataclass(frozen=True)
class RoutedGate:
    kind: GateKind
    qubits: tuple[int, ...]
    params: tuple[float, ...] = ()
    swap: bool = False
    epr: bool = False
    source: int = -1

    @property
    def epr_uses(self) -> int:
        if not self.epr:
            return 0
        return 3 if self.swap else 1


@dataclass(frozen=True)
class MappedSubcircuit:
    worker_id: int
    gates: tuple[RoutedGate, ...]
    final_layout: dict[int, int]
    swap_count: int
    epr_uses: int


@dataclass(frozen=True)
class RoutingResult:
    mapped: tuple[MappedSubcircuit, ...]
    total_so: int
    swap_table: dict[int, int]
    gates: tuple[RoutedGate, ...]
    initial_layout: Layout
    final_layout: Layout
    epr_uses: int = 0
    seed: int = 0
    stats: dict = field(default_factory=dict, compare=False)


def swap_overhead(result: RoutingResult | None) -> int:
    """Total SWAP count: the sum of per-subcircuit SWAP counts."""
    if result is None:
        return 0
    return sum(m.swap_count for m in result.mapped)


# ---------------------------------------------------------------- layout


def _grow_region(worker, seed: int, size: int, quality) -> list[int]:
    region = [seed]
    inside = {seed}
    frontier = set(worker.adjacency[seed])
    while len(region) < size:
        if not frontier:
            raise AssertionError(f"worker {worker.worker_id}: no connected region of size {size}")
        nxt = min(frontier, key=lambda q: (quality[q], q))
        frontier.discard(nxt)
        region.append(nxt)
        inside.add(nxt)
        frontier.update(x for x in worker.adjacency[nxt] if x not in inside)
    return region


def best_region(worker, size: int, required: int | None = None) -> list[int]:
    """Lowest-mean-quality connected region of ``size`` local qubits.

    Regions are grown greedily (cheapest frontier qubit first) from every seed in
    quality order; ``required`` forces the seed.
    """
    quality = worker.quality
    seeds = [required] if required is not None else list(worker.ranked_qubits)
    best, best_mean = None, None
    for s in seeds:
        region = _grow_region(worker, s, size, quality)
        mean = sum(quality[q] for q in region) / size
        if best_mean is None or mean < best_mean - 1e-15:
            best, best_mean = region, mean
    return best


def _local_bfs_dist(worker, src: int) -> dict[int, int]:
    dist = {src: 0}
    queue = deque([src])
    while queue:
        u = queue.popleft()
        for v in worker.adjacency[u]:
            if v not in dist:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def _cross_info(circuit: Circuit, partition: Partition) -> dict[int, dict[int, int]]:
    """logical qubit -> {partner worker: cross-gate count}."""
    info: dict[int, dict[int, int]] = {}
    for i in partition.cross_gates:
        a, b = circuit.gates[i].qubits
        wa, wb = partition.assignment[a], partition.assignment[b]
        info.setdefault(a, {}).setdefault(wb, 0)
        info[a][wb] += 1
        info.setdefault(b, {}).setdefault(wa, 0)
        info[b][wa] += 1
    return info


def _endpoint_toward(vst: VirtualSystemTopology, worker: int, partner: int) -> int | None:
    """Local qubit of ``worker`` on the first EPR link that leads toward ``partner``."""
    direct = [link for link in vst.links if {link.worker_a, link.worker_b} == {worker, partner}]
    pool = direct or [link for link in vst.links if worker in (link.worker_a, link.worker_b)]
    if not pool:
        return None
    link = pool[0]
    return link.qubit_a if link.worker_a == worker else link.qubit_b


def initial_layout(partition: Partition, vst: VirtualSystemTopology, circuit: Circuit,
                   embed_budget: int = EMBED_BUDGET) -> Layout:
    """Place each worker's logical qubits on a low-noise connected region.

    A SWAP-free embedding of the interaction graph is used when one is found
    within ``embed_budget`` search steps. Otherwise qubits with cross-worker gates
    sit nearest the EPR endpoint facing their partner worker, and the rest are
    placed greedily next to their already placed interaction partners.
    """
    ig = interaction_graph(circuit)
    embedded = find_swap_free_layout(partition, vst, ig, embed_budget)
    if embedded is not None:
        return embedded
    adj = ig.neighbors()
    cross = _cross_info(circuit, partition)
    l2p = [-1] * circuit.n_qubits
    for sub in partition.subcircuits:
        w = sub.worker_id
        worker = vst.workers[w]
        owned = list(sub.qubits)
        cross_owned = sorted((q for q in owned if q in cross),
                             key=lambda q: (-sum(cross[q].values()), q))
        anchor = None
        if cross_owned:
            partners: dict[int, int] = {}
            for q in cross_owned:
                for pw, c in cross[q].items():
                    partners[pw] = partners.get(pw, 0) + c
            top = min(partners, key=lambda pw: (-partners[pw], pw))
            anchor = _endpoint_toward(vst, w, top)
        region = best_region(worker, len(owned), required=anchor)
        free = set(region)
        local: dict[int, int] = {}
        for q in cross_owned:
            pw = min(cross[q], key=lambda x: (-cross[q][x], x))
            ep = _endpoint_toward(vst, w, pw)
            dist = _local_bfs_dist(worker, ep if ep is not None else region[0])
            spot = min(free, key=lambda p: (dist.get(p, 1 << 30), worker.quality[p], p))
            local[q] = spot
            free.discard(spot)
        dist_cache: dict[int, dict[int, int]] = {}

        def dist(a, b):
            if a not in dist_cache:
                dist_cache[a] = _local_bfs_dist(worker, a)
            return dist_cache[a].get(b, 1 << 30)

        rest = [q for q in owned if q not in local]
        while rest:
            # most connected to what is already placed, then highest degree
            q = min(rest, key=lambda x: (-sum(c for y, c in adj[x].items() if y in local),
                                         -sum(adj[x].values()), x))
            rest.remove(q)
            placed = [(local[y], c) for y, c in adj[q].items() if y in local]
            if placed:
                spot = min(free, key=lambda p: (sum(c * dist(p, s) for s, c in placed),
                                                worker.quality[p], p))
            else:
                spot = min(free, key=lambda p: (sum(dist(p, r) for r in free),
                                                worker.quality[p], p))
            local[q] = spot
            free.discard(spot)
        for q, p in local.items():
            l2p[q] = vst.node(w, p)
    return Layout(tuple(l2p))


def find_swap_free_layout(partition: Partition, vst: VirtualSystemTopology, ig: InteractionGraph,
                          budget: int = EMBED_BUDGET) -> Layout | None:
    """Backtracking search for a layout where every interacting pair is VST-adjacent.

    Each logical qubit stays on its assigned worker, so cross-worker pairs must land
    on EPR edges. Returns None when none is found within ``budget`` expansions.
    """
    n = ig.n_qubits
    adj = ig.neighbors()
    assign = partition.assignment
    vadj = vst.adjacency
    max_deg = {w: max(len(vadj[p]) for p in vst.nodes_of(w)) for w in set(assign)}
    if any(len(adj[q]) > max_deg[assign[q]] for q in range(n)):
        return None
    links_between: dict[tuple[int, int], int] = {}
    for link in vst.links:
        key = (link.worker_a, link.worker_b)
        links_between[key] = links_between.get(key, 0) + 1
    cross_between: dict[tuple[int, int], int] = {}
    for (a, b) in ig.edge_weights:
        wa, wb = assign[a], assign[b]
        if wa != wb:
            key = (min(wa, wb), max(wa, wb))
            cross_between[key] = cross_between.get(key, 0) + 1
    if any(c > links_between.get(k, 0) for k, c in cross_between.items()):
        return None

    quality = vst.node_quality
    # variable order: cross-edge qubits first, then BFS over the interaction graph
    has_cross = [any(assign[y] != assign[q] for y in adj[q]) for q in range(n)]
    order, seen = [], set()
    starts = sorted(range(n), key=lambda q: (not has_cross[q], -len(adj[q]), q))
    for s in starts:
        if s in seen or not adj[s]:
            continue
        queue = deque([s])
        seen.add(s)
        while queue:
            u = queue.popleft()
            order.append(u)
            for v in sorted(adj[u], key=lambda x: (not has_cross[x], x)):
                if v not in seen:
                    seen.add(v)
                    queue.append(v)
    isolated = [q for q in range(n) if not adj[q]]

    worker_nodes = {w: sorted(vst.nodes_of(w), key=lambda p: (quality[p], p)) for w in set(assign)}
    l2p = [-1] * n
    used: set[int] = set()
    steps = 0

    def domain(q):
        mapped = [l2p[y] for y in adj[q] if l2p[y] >= 0]
        w = assign[q]
        if mapped:
            cands = set(vadj[mapped[0]])
            for p in mapped[1:]:
                cands &= set(vadj[p])
            cands = [p for p in cands if vst.node_tags[p][0] == w and p not in used]
            return sorted(cands, key=lambda p: (quality[p], p))
        return [p for p in worker_nodes[w] if p not in used]

    def solve(i: int) -> bool:
        nonlocal steps
        if i == len(order):
            return True
        q = order[i]
        for p in domain(q):
            steps += 1
            if steps > budget:
                return False
            if len(vadj[p]) < len(adj[q]):
                continue
            l2p[q] = p
            used.add(p)
            if solve(i + 1):
                return True
            used.discard(p)
            l2p[q] = -1
            if steps > budget:
                return False
        return False

    if not solve(0):
        return None
    for q in isolated:
        spot = next((p for p in worker_nodes[assign[q]] if p not in used), None)
        if spot is None:
            return None
        l2p[q] = spot
        used.add(spot)
    return Layout(tuple(l2p))


def identity_layout(partition: Partition, vst: VirtualSystemTopology) -> Layout:
    """k-th logical qubit of each worker on that worker's local qubit k."""
    l2p = [-1] * partition.n_qubits
    for sub in partition.subcircuits:
        for k, q in enumerate(sub.qubits):
            l2p[q] = vst.node(sub.worker_id, k)
    return Layout(tuple(l2p))


# ---------------------------------------------------------------- routing


def _attribute(vst: VirtualSystemTopology, qubits) -> int:
    return min(vst.worker_of(p) for p in qubits)


def route(circuit: Circuit, partition: Partition, layout: Layout, vst: VirtualSystemTopology,
          seed: int = 0, options: RouterOptions | None = None) -> RoutingResult:
    """SABRE-style routing of the whole circuit DAG over the VST.

    Cross-worker gates are routed together with local ones; SWAPs may cross EPR
    edges but pay ``w_epr`` in the distance heuristic and three EPR uses.
    """
    opts = options or RouterOptions()
    if not circuit.is_lowered:
        raise ValueError("route needs a lowered circuit")
    n = circuit.n_qubits
    if len(layout) != n:
        raise ValueError(f"layout has {len(layout)} entries, circuit has {n} qubits")
    for q, w in enumerate(partition.assignment):
        if vst.worker_of(layout[q]) != w:
            raise ValueError(f"layout puts logical {q} on worker {vst.worker_of(layout[q])}, "
                             f"partition assigns worker {w}")
    gates = circuit.gates
    dist = vst.distances(opts.w_epr)
    dist_rows = dist.tolist()
    comp = vst.node_components()
    for i, g in enumerate(gates):
        if g.kind is GateKind.CX and comp[layout[g.qubits[0]]] != comp[layout[g.qubits[1]]]:
            raise RoutingError(
                f"gate {i} {g!r}: operands sit in disconnected regions of the VST", i)

    rng = random.Random(seed)
    n_nodes = vst.n_nodes
    adjacency = vst.adjacency
    edge_set = vst.edge_set
    epr_edges = vst.epr_edges
    l2p = list(layout.l2p)
    p2l = [-1] * n_nodes
    for q, p in enumerate(l2p):
        p2l[p] = q

    # DAG
    succ: list[list[int]] = [[] for _ in gates]
    n_pred = [0] * len(gates)
    last: dict[int, int] = {}
    for i, g in enumerate(gates):
        preds = {last[q] for q in g.qubits if q in last}
        for p in preds:
            succ[p].append(i)
        n_pred[i] = len(preds)
        for q in g.qubits:
            last[q] = i
    front = sorted(i for i in range(len(gates)) if n_pred[i] == 0)
    out: list[RoutedGate] = []
    decay = np.ones(n_nodes)
    swaps_since_reset = 0
    swaps_since_progress = 0
    n_swaps = 0
    valve_uses = 0
    stall_limit = max(10, 3 * n_nodes)

    def emit(i: int):
        g = gates[i]
        phys = tuple(l2p[q] for q in g.qubits)
        is_epr = g.kind is GateKind.CX and (min(phys), max(phys)) in epr_edges
        out.append(RoutedGate(g.kind, phys, g.params, False, is_epr, i))

    def do_swap(pa: int, pb: int):
        nonlocal swaps_since_reset, n_swaps
        e = (min(pa, pb), max(pa, pb))
        out.append(RoutedGate(GateKind.SWAP, e, (), True, e in epr_edges, -1))
        qa, qb = p2l[pa], p2l[pb]
        p2l[pa], p2l[pb] = qb, qa
        if qa >= 0:
            l2p[qa] = pb
        if qb >= 0:
            l2p[qb] = pa
        n_swaps += 1
        decay[pa] += opts.decay_delta
        decay[pb] += opts.decay_delta
        swaps_since_reset += 1
        if swaps_since_reset >= opts.decay_reset:
            decay[:] = 1.0
            swaps_since_reset = 0

    def executable(i: int) -> bool:
        g = gates[i]
        if g.kind is not GateKind.CX:
            return True
        a, b = l2p[g.qubits[0]], l2p[g.qubits[1]]
        return (min(a, b), max(a, b)) in edge_set

    def extended_set(front_gates) -> list[int]:
        ext, seen = [], set(front_gates)
        queue = deque(front_gates)
        while queue and len(ext) < opts.extended_size:
            i = queue.popleft()
            for s in succ[i]:
                if s in seen:
                    continue
                seen.add(s)
                if gates[s].kind is GateKind.CX:
                    ext.append(s)
                    if len(ext) >= opts.extended_size:
                        break
                queue.append(s)
        return ext

    ext_for: list[int] | None = None
    ext: list[int] = []
    while front:
        progressed = True
        while progressed:
            progressed = False
            nxt = []
            for i in front:
                if executable(i):
                    emit(i)
                    progressed = True
                    for s in succ[i]:
                        n_pred[s] -= 1
                        if n_pred[s] == 0:
                            nxt.append(s)
                else:
                    nxt.append(i)
            front = sorted(nxt)
            if progressed:
                swaps_since_progress = 0
                decay[:] = 1.0
                swaps_since_reset = 0
        if not front:
            break
        if swaps_since_progress >= stall_limit:
            # release valve: walk the first blocked gate's operands together
            i = front[0]
            a, b = (l2p[q] for q in gates[i].qubits)
            path = _shortest_path(adjacency, dist, a, b)
            for u, v in zip(path[:-2], path[1:-1]):
                do_swap(u, v)
            valve_uses += 1
            swaps_since_progress = 0
            ext_for = None
            continue
        front2 = [i for i in front if gates[i].kind is GateKind.CX]
        if front2 != ext_for:
            ext_for, ext = front2, extended_set(front2)
            h_front = _PairSum([gates[i].qubits for i in front2], l2p, dist_rows)
            h_ext = _PairSum([gates[i].qubits for i in ext], l2p, dist_rows)
        cand = set()
        for i in front2:
            for q in gates[i].qubits:
                p = l2p[q]
                for nb in adjacency[p]:
                    cand.add((min(p, nb), max(p, nb)))
        best, best_swaps = None, []
        for pa, pb in sorted(cand):
            score = max(decay[pa], decay[pb]) * (
                h_front.after_swap(pa, pb) + opts.extended_weight * h_ext.after_swap(pa, pb))
            if best is None or score < best - 1e-12:
                best, best_swaps = score, [(pa, pb)]
            elif abs(score - best) <= 1e-12:
                best_swaps.append((pa, pb))
        pa, pb = best_swaps[0] if len(best_swaps) == 1 else rng.choice(best_swaps)
        do_swap(pa, pb)
        h_front.apply_swap(pa, pb)
        h_ext.apply_swap(pa, pb)
        swaps_since_progress += 1

    return _assemble(vst, out, layout, Layout(tuple(l2p)), seed,
                     {"valve_uses": valve_uses, "swaps": n_swaps})


class _PairSum:
    """Mean distance over logical pairs, with cheap re-evaluation after one SWAP."""

    def __init__(self, pairs, l2p, dist_rows):
        self.dist = dist_rows
        self.ends = [(l2p[x], l2p[y]) for x, y in pairs]
        self.total = sum(dist_rows[a][b] for a, b in self.ends)
        self.n = max(len(self.ends), 1)
        self.touching: dict[int, list[int]] = {}
        for k, (a, b) in enumerate(self.ends):
            self.touching.setdefault(a, []).append(k)
            self.touching.setdefault(b, []).append(k)

    def after_swap(self, pa: int, pb: int) -> float:
        if not self.ends:
            return 0.0
        d, ends, delta = self.dist, self.ends, 0.0
        ka = self.touching.get(pa, ())
        kb = self.touching.get(pb, ())
        for k in ka:
            a, b = ends[k]
            if a == pa:
                delta += d[pb][pb if b == pa else pa if b == pb else b] - d[a][b]
            else:
                delta += d[a if a != pb else pa][pb] - d[a][b]
        for k in kb:
            a, b = ends[k]
            if a == pa or b == pa:
                continue  # already counted with pa
            if a == pb:
                delta += d[pa][b] - d[a][b]
            else:
                delta += d[a][pa] - d[a][b]
        return (self.total + delta) / self.n

    def apply_swap(self, pa: int, pb: int) -> None:
        ka = self.touching.pop(pa, [])
        kb = self.touching.pop(pb, [])
        swap = {pa: pb, pb: pa}
        for k in set(ka) | set(kb):
            a, b = self.ends[k]
            na, nb = swap.get(a, a), swap.get(b, b)
            self.total += self.dist[na][nb] - self.dist[a][b]
            self.ends[k] = (na, nb)
        if ka:
            self.touching[pb] = ka
        if kb:
            self.touching[pa] = kb


def refine_layout(circuit: Circuit, partition: Partition, layout: Layout,
                  vst: VirtualSystemTopology, seed: int = 0,
                  options: RouterOptions | None = None,
                  forward: RoutingResult | None = None) -> Layout | None:
    """Forward-backward refinement: route forward, route the reversed circuit from
    where the qubits ended up, and return that end point as a new start.

    ``forward`` may carry an existing forward routing from ``layout``. Returns None
    when either pass leaves some logical qubit off its assigned worker.
    """
    owner = partition.assignment

    def on_workers(lay: Layout) -> bool:
        return all(vst.worker_of(p) == owner[q] for q, p in enumerate(lay.l2p))

    if forward is None:
        forward = route(circuit, partition, layout, vst, seed, options)
    if not on_workers(forward.final_layout):
        return None
    body = circuit.without_measurements()
    backward = Circuit(body.n_qubits, list(reversed(body.gates)), body.name)
    end = route(backward, partition, forward.final_layout, vst, seed, options).final_layout
    return end if on_workers(end) else None


def _shortest_path(adjacency, dist, a: int, b: int) -> list[int]:
    path = [a]
    u = a
    while u != b:
        u = min((v for v in adjacency[u] if dist[v, b] < dist[u, b]),
                key=lambda v: (dist[v, b], v))
        path.append(u)
    return path


def _assemble(vst, out, layout, final, seed, stats) -> RoutingResult:
    per_worker: dict[int, list[RoutedGate]] = {}
    for g in out:
        per_worker.setdefault(_attribute(vst, g.qubits), []).append(g)
    final_by_worker: dict[int, dict[int, int]] = {}
    for q, p in enumerate(final.l2p):
        final_by_worker.setdefault(vst.worker_of(p), {})[q] = p
    for w in final_by_worker:
        per_worker.setdefault(w, [])
    mapped = []
    for w in sorted(per_worker):
        gs = per_worker[w]
        mapped.append(MappedSubcircuit(
            worker_id=w, gates=tuple(gs), final_layout=final_by_worker.get(w, {}),
            swap_count=sum(1 for g in gs if g.swap),
            epr_uses=sum(g.epr_uses for g in gs)))
    table = {m.worker_id: m.swap_count for m in mapped}
    return RoutingResult(
        mapped=tuple(mapped), total_so=sum(table.values()), swap_table=table,
        gates=tuple(out), initial_layout=layout, final_layout=final,
        epr_uses=sum(m.epr_uses for m in mapped), seed=seed, stats=stats)
