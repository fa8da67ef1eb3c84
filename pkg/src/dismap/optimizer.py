"""Iterative optimization over EPR-link candidates: keep the plan with the fewest SWAPs."""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .circuit import Circuit, interaction_graph
from .cutter import (ALPHA, BETA, InsufficientQubitsError, Partition, best_partition,
                     make_partition, topo_cutter_sweep)
from .hardware import (EprCandidate, SystemConfig, VirtualSystemTopology, con_vst,
                       enumerate_epr_candidates)
from .router import (EMBED_BUDGET, Layout, RouterOptions, RoutingResult, find_swap_free_layout,
                     identity_layout, initial_layout, refine_layout, route)

log = logging.getLogger(__name__)


class InfeasibleError(RuntimeError):
    pass


@dataclass(frozen=True)
class Evaluation:
    candidate_index: int
    links: str
    so: int
    fidelity: float | None = None
    workers_used: tuple[int, ...] = ()
    cut_weight: float = 0.0


@dataclass(frozen=True)
class Plan:
    circuit: Circuit
    candidate: EprCandidate
    vst: VirtualSystemTopology
    partition: Partition
    routing: RoutingResult
    so: int
    fidelity: float | None = None
    evaluations: tuple[Evaluation, ...] = ()
    label: str = "dismap"

    def best_so_far(self) -> list[int]:
        out, best = [], None
        for e in self.evaluations:
            best = e.so if best is None else min(best, e.so)
            out.append(best)
        return out


@dataclass(frozen=True)
class OptimizerOptions:
    alpha: float = ALPHA
    beta: float = BETA
    router: RouterOptions = field(default_factory=RouterOptions)
    select: str = "swaps"
    restarts: int = 1
    threads: int = 1
    embed_budget: int = EMBED_BUDGET


class _SweepCache:
    """Memo tables shared by all candidates of one optimize call.

    Sweep partitions depend only on the worker group. Layouts and routings depend
    only on the partition and the links inside its routing region, so candidates
    that differ elsewhere share them. Every entry is a pure function of its key,
    which keeps results independent of evaluation order.
    """

    def __init__(self, circuit: Circuit, config: SystemConfig, alpha: float, beta: float):
        self.circuit = circuit
        self.config = config
        self.alpha, self.beta = alpha, beta
        self.ig = interaction_graph(circuit)
        self.sweeps: dict[tuple[int, ...], list[Partition]] = {}
        self.vsts: dict[tuple, VirtualSystemTopology] = {}
        self.embeddable: dict[tuple, Layout | None] = {}
        self.routings: dict[tuple, RoutingResult] = {}

    def partitions(self, vst: VirtualSystemTopology) -> list[Partition]:
        n = self.circuit.n_qubits
        out = []
        for group in vst.components:
            if sum(vst.workers[w].n_qubits for w in group) < n:
                continue
            if group not in self.sweeps:
                self.sweeps[group] = topo_cutter_sweep(
                    self.circuit, vst, self.alpha, self.beta, workers=group)
            out.extend(self.sweeps[group])
        if not out:
            raise InsufficientQubitsError(n, max(sum(vst.workers[w].n_qubits for w in g)
                                                 for g in vst.components),
                                          "the largest EPR-connected worker group has")
        return out

    def region_vst(self, partition: Partition, vst: VirtualSystemTopology):
        """VST keeping only the links among the workers routing may touch."""
        links = region_links(partition, vst)
        if links not in self.vsts:
            self.vsts[links] = con_vst(self.config, EprCandidate(links, -1))
        return links, self.vsts[links]

    def swap_free(self, partition: Partition, vst: VirtualSystemTopology,
                  budget: int) -> Layout | None:
        links, sub = self.region_vst(partition, vst)
        key = (partition.assignment, links)
        if key not in self.embeddable:
            self.embeddable[key] = find_swap_free_layout(partition, sub, self.ig, budget)
        return self.embeddable[key]


def region_links(partition: Partition, vst: VirtualSystemTopology) -> tuple:
    """Links among the partition's workers, or the whole group when those are not linked."""
    used = set(partition.workers_used)
    inner = tuple(l for l in vst.links if l.worker_a in used and l.worker_b in used)
    if len(_components_of(used, inner)) <= 1:
        return inner
    group = next(set(g) for g in vst.components if used <= set(g))
    return tuple(l for l in vst.links if l.worker_a in group and l.worker_b in group)


def _components_of(workers: set[int], links) -> list[set[int]]:
    parent = {w: w for w in workers}

    def find(x):
        while parent[x] != x:
            x = parent[x]
        return x

    for l in links:
        parent[find(l.worker_a)] = find(l.worker_b)
    groups: dict[int, set[int]] = {}
    for w in workers:
        groups.setdefault(find(w), set()).add(w)
    return list(groups.values())


def plan_candidate(circuit: Circuit, config: SystemConfig, candidate: EprCandidate, seed: int,
                   options: OptimizerOptions, cache: _SweepCache | None = None):
    """ConVST -> TopoCutter -> SubMapper for one candidate; returns (vst, partition, routing).

    The partition is TopoCutter's lowest-cost one unless its layout needs SWAPs and
    another partition of the sweep admits a SWAP-free layout, in which case the
    cheapest such partition is used.
    """
    cache = cache or _SweepCache(circuit, config, options.alpha, options.beta)
    vst = con_vst(config, candidate)
    partitions = cache.partitions(vst)
    chosen = best_partition(partitions)
    layout = cache.swap_free(chosen, vst, options.embed_budget)
    if layout is None:
        for p in sorted(partitions, key=lambda p: p.cost["cost"]):
            if p is chosen:
                continue
            layout = cache.swap_free(p, vst, options.embed_budget)
            if layout is not None:
                chosen = p
                break
    links, sub = cache.region_vst(chosen, vst)
    key = (chosen.assignment, links, seed)
    if key not in cache.routings:
        refine = layout is None
        if refine:
            layout = initial_layout(chosen, sub, circuit, embed_budget=0)
        runs = [route(circuit, chosen, layout, sub, seed + r, options.router)
                for r in range(max(1, options.restarts))]
        if refine:
            # forward-backward pass from the first routing's end point
            second = refine_layout(circuit, chosen, layout, sub, seed, options.router, runs[0])
            if second is not None:
                runs += [route(circuit, chosen, second, sub, seed + r, options.router)
                         for r in range(max(1, options.restarts))]
        best = min(runs, key=lambda r: r.total_so)
        cache.routings[key] = best
    return vst, chosen, cache.routings[key]


def optimize(circuit: Circuit, config: SystemConfig, seed: int = 0,
             options: OptimizerOptions | None = None,
             candidates: list[EprCandidate] | None = None) -> Plan:
    """Evaluate every EPR candidate and keep the first one reaching the minimum SWAP count."""
    from .verifier import estimate_fidelity

    opts = options or OptimizerOptions()
    if not circuit.is_lowered:
        raise ValueError("optimize needs a lowered circuit")
    if circuit.n_qubits > config.total_capacity:
        raise InsufficientQubitsError(circuit.n_qubits, config.total_capacity)
    if candidates is None:
        candidates = enumerate_epr_candidates(config, circuit.n_qubits)
    if not candidates:
        raise InfeasibleError(
            f"no EPR link set with at most {config.max_links} link(s) connects "
            f"{circuit.n_qubits} qubits of capacity")
    cache = _SweepCache(circuit, config, opts.alpha, opts.beta)
    # fill the sweep cache up front so parallel workers only read it
    for cand in candidates:
        cache.partitions(con_vst(config, cand))

    def evaluate(cand):
        vst, partition, routing = plan_candidate(circuit, config, cand, seed, opts, cache)
        fid = None
        if opts.select == "fidelity":
            fid = estimate_fidelity(_as_plan(circuit, cand, vst, partition, routing), config).f
        return cand, vst, partition, routing, fid

    if opts.threads > 1:
        with ThreadPoolExecutor(max_workers=opts.threads) as pool:
            results = list(pool.map(evaluate, candidates))
    else:
        results = [evaluate(c) for c in candidates]

    evaluations = []
    best = None
    ig = interaction_graph(circuit)
    for cand, vst, partition, routing, fid in results:
        evaluations.append(Evaluation(cand.candidate_index, cand.label(), routing.total_so, fid,
                                      partition.workers_used, float(partition.cut_weight(ig))))
        if best is None:
            best = (cand, vst, partition, routing, fid)
        elif opts.select == "fidelity":
            if fid > best[4] + 1e-15:
                best = (cand, vst, partition, routing, fid)
        elif routing.total_so < best[3].total_so:
            best = (cand, vst, partition, routing, fid)
    cand, vst, partition, routing, _ = best
    log.info("optimize %s: %d candidates, best #%d with SO=%d", circuit.name, len(candidates),
             cand.candidate_index, routing.total_so)
    plan = _as_plan(circuit, cand, vst, partition, routing, tuple(evaluations))
    return _with_fidelity(plan, config)


def _as_plan(circuit, cand, vst, partition, routing, evaluations=(), label="dismap") -> Plan:
    return Plan(circuit=circuit, candidate=cand, vst=vst, partition=partition, routing=routing,
                so=routing.total_so, evaluations=evaluations, label=label)


def _with_fidelity(plan: Plan, config: SystemConfig) -> Plan:
    from dataclasses import replace

    from .verifier import estimate_fidelity
    return replace(plan, fidelity=estimate_fidelity(plan, config).f)


def first_fit_assignment(circuit: Circuit, vst: VirtualSystemTopology) -> tuple[int, ...]:
    """Logical qubits to workers in index order, filling each worker to capacity."""
    n = circuit.n_qubits
    group = next((g for g in vst.components
                  if sum(vst.workers[w].n_qubits for w in g) >= n), None)
    if group is None:
        raise InsufficientQubitsError(n, max(sum(vst.workers[w].n_qubits for w in g)
                                             for g in vst.components),
                                      "the largest EPR-connected worker group has")
    out = []
    for w in group:
        out += [w] * min(vst.workers[w].n_qubits, n - len(out))
        if len(out) == n:
            break
    return tuple(out)


def baseline_plan(circuit: Circuit, config: SystemConfig, seed: int = 0,
                  options: OptimizerOptions | None = None) -> Plan:
    """First candidate, first-fit cut, identity layout, same router."""
    opts = options or OptimizerOptions()
    if circuit.n_qubits > config.total_capacity:
        raise InsufficientQubitsError(circuit.n_qubits, config.total_capacity)
    candidates = enumerate_epr_candidates(config, circuit.n_qubits)
    if not candidates:
        raise InfeasibleError("no feasible EPR link set for the baseline")
    cand = candidates[0]
    vst = con_vst(config, cand)
    partition = make_partition(circuit, first_fit_assignment(circuit, vst))
    layout = identity_layout(partition, vst)
    routing = route(circuit, partition, layout, vst, seed, opts.router)
    evaluations = (Evaluation(cand.candidate_index, cand.label(), routing.total_so, None,
                              partition.workers_used,
                              float(partition.cut_weight(interaction_graph(circuit)))),)
    plan = _as_plan(circuit, cand, vst, partition, routing, evaluations, label="baseline")
    return _with_fidelity(plan, config)
