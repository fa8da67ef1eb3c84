"""Worker models, qubit quality ranking, EPR-link candidates and the virtual system topology."""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, shortest_path

DEFAULT_SR = 0.95
DEFAULT_MAX_LINKS = 2
DEFAULT_K = 3


class ConfigError(ValueError):
    """Hardware configuration failed validation; ``problems`` lists every violation."""

    def __init__(self, problems: list[str] | str):
        self.problems = [problems] if isinstance(problems, str) else list(problems)
        super().__init__("invalid hardware config:\n  " + "\n  ".join(self.problems))


def _pair(a: int, b: int) -> tuple[int, int]:
    return (a, b) if a < b else (b, a)


def _is_connected(n: int, edges) -> bool:
    if n <= 1:
        return True
    seen = {0}
    adj: dict[int, list[int]] = {}
    for a, b in edges:
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    stack = [0]
    while stack:
        u = stack.pop()
        for v in adj.get(u, ()):
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return len(seen) == n


@dataclass(frozen=True)
class WorkerSpec:
    worker_id: int
    n_qubits: int
    coupling_edges: tuple[tuple[int, int], ...]
    err_1q: tuple[float, ...]
    err_2q: dict[tuple[int, int], float]
    err_readout: tuple[float, ...]
    name: str = ""

    def __post_init__(self):
        edges = tuple(sorted({_pair(int(a), int(b)) for a, b in self.coupling_edges}))
        object.__setattr__(self, "coupling_edges", edges)
        object.__setattr__(self, "err_1q", tuple(float(x) for x in self.err_1q))
        object.__setattr__(self, "err_readout", tuple(float(x) for x in self.err_readout))
        object.__setattr__(
            self, "err_2q", {_pair(int(a), int(b)): float(p) for (a, b), p in self.err_2q.items()})
        problems = self.problems()
        if problems:
            raise ConfigError(problems)

    def problems(self) -> list[str]:
        tag = f"worker {self.worker_id}"
        out = []
        if self.n_qubits < 1:
            out.append(f"{tag}: needs at least one qubit")
        for a, b in self.coupling_edges:
            if a == b:
                out.append(f"{tag}: self-loop on qubit {a}")
            if not (0 <= a < self.n_qubits and 0 <= b < self.n_qubits):
                out.append(f"{tag}: edge {a}-{b} outside 0..{self.n_qubits - 1}")
        if not _is_connected(self.n_qubits, self.coupling_edges):
            out.append(f"{tag}: coupling graph is disconnected")
        for label, arr in (("err_1q", self.err_1q), ("err_readout", self.err_readout)):
            if len(arr) != self.n_qubits:
                out.append(f"{tag}: {label} has {len(arr)} entries, expected {self.n_qubits}")
            for q, p in enumerate(arr):
                if not 0.0 <= p < 1.0:
                    out.append(f"{tag}: {label}[{q}] = {p} outside [0, 1)")
        for e in self.coupling_edges:
            if e not in self.err_2q:
                out.append(f"{tag}: edge {e[0]}-{e[1]} has no err_2q entry")
        for e, p in sorted(self.err_2q.items()):
            if e not in self.coupling_edges:
                out.append(f"{tag}: err_2q entry {e[0]}-{e[1]} is not a coupling edge")
            if not 0.0 <= p < 1.0:
                out.append(f"{tag}: err_2q[{e[0]}-{e[1]}] = {p} outside [0, 1)")
        return out

    @cached_property
    def adjacency(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.n_qubits)]
        for a, b in self.coupling_edges:
            adj[a].append(b)
            adj[b].append(a)
        return [sorted(x) for x in adj]

    @cached_property
    def quality(self) -> tuple[float, ...]:
        return tuple(qubit_quality(self, q) for q in range(self.n_qubits))

    @cached_property
    def ranked_qubits(self) -> tuple[int, ...]:
        """Qubits from best (lowest score) to worst, ties by index."""
        return tuple(sorted(range(self.n_qubits), key=lambda q: (self.quality[q], q)))

    def __hash__(self):
        return hash((self.worker_id, self.n_qubits, self.coupling_edges))


def qubit_quality(worker: WorkerSpec, qubit: int) -> float:
    """Mean incident two-qubit error + readout error + single-qubit error (lower is better)."""
    incident = [worker.err_2q[_pair(qubit, n)] for n in worker.adjacency[qubit]]
    mean_2q = sum(incident) / len(incident) if incident else 0.0
    return mean_2q + worker.err_readout[qubit] + worker.err_1q[qubit]


@dataclass(frozen=True)
class SystemConfig:
    workers: tuple[WorkerSpec, ...]
    default_sr: float = DEFAULT_SR
    max_links: int = DEFAULT_MAX_LINKS
    candidates_per_worker: int = DEFAULT_K
    link_sr: dict[tuple[int, int, int, int], float] = field(default_factory=dict)
    name: str = "system"

    def __post_init__(self):
        object.__setattr__(self, "workers", tuple(self.workers))
        problems = []
        ids = [w.worker_id for w in self.workers]
        if ids != list(range(len(ids))):
            problems.append(f"worker ids must be 0..{len(ids) - 1} in order, got {ids}")
        if not 0.0 < self.default_sr <= 1.0:
            problems.append(f"default_sr = {self.default_sr} outside (0, 1]")
        if self.max_links < 1:
            problems.append(f"max_links = {self.max_links} must be >= 1")
        if self.candidates_per_worker < 1:
            problems.append(f"candidates_per_worker = {self.candidates_per_worker} must be >= 1")
        for key, sr in self.link_sr.items():
            if not 0.0 < sr <= 1.0:
                problems.append(f"link_sr {key} = {sr} outside (0, 1]")
        if problems:
            raise ConfigError(problems)

    @property
    def total_capacity(self) -> int:
        return sum(w.n_qubits for w in self.workers)

    def sr_for(self, wa: int, qa: int, wb: int, qb: int) -> float:
        key = (wa, qa, wb, qb) if wa < wb else (wb, qb, wa, qa)
        return self.link_sr.get(key, self.default_sr)

    def replace(self, **changes) -> SystemConfig:
        fields = dict(workers=self.workers, default_sr=self.default_sr, max_links=self.max_links,
                      candidates_per_worker=self.candidates_per_worker, link_sr=self.link_sr,
                      name=self.name)
        fields.update(changes)
        return SystemConfig(**fields)


def _parse_edge_key(key: str) -> tuple[int, int]:
    a, b = key.split("-")
    return int(a), int(b)


def _parse_link_key(key: str) -> tuple[int, int, int, int]:
    left, right = key.split("-")
    wa, qa = (int(x) for x in left.split(":"))
    wb, qb = (int(x) for x in right.split(":"))
    return (wa, qa, wb, qb) if wa < wb else (wb, qb, wa, qa)


def config_from_dict(data: dict, name: str = "system") -> SystemConfig:
    problems: list[str] = []
    workers: list[WorkerSpec] = []
    if not isinstance(data, dict):
        raise ConfigError("top level must be a JSON object")
    raw_workers = data.get("workers")
    if not isinstance(raw_workers, list) or not raw_workers:
        problems.append("missing field 'workers' (non-empty list)")
        raw_workers = []
    for pos, raw in enumerate(raw_workers):
        missing = [k for k in ("id", "qubits", "edges", "err_1q", "err_2q", "err_readout")
                   if k not in raw]
        if missing:
            problems.append(f"worker #{pos}: missing field(s) {', '.join(missing)}")
            continue
        try:
            err_2q = {_parse_edge_key(k): v for k, v in raw["err_2q"].items()}
            workers.append(WorkerSpec(
                worker_id=raw["id"], n_qubits=raw["qubits"],
                coupling_edges=[tuple(e) for e in raw["edges"]],
                err_1q=raw["err_1q"], err_2q=err_2q, err_readout=raw["err_readout"],
                name=raw.get("name", "")))
        except ConfigError as exc:
            problems.extend(exc.problems)
        except (TypeError, ValueError) as exc:
            problems.append(f"worker #{pos}: malformed entry ({exc})")
    link_sr = {}
    for key, sr in data.get("link_sr", {}).items():
        try:
            link_sr[_parse_link_key(key)] = float(sr)
        except ValueError:
            problems.append(f"link_sr key {key!r} is not 'w:q-w:q'")
    try:
        config = SystemConfig(
            workers=workers,
            default_sr=float(data.get("default_sr", DEFAULT_SR)),
            max_links=int(data.get("max_links", DEFAULT_MAX_LINKS)),
            candidates_per_worker=int(data.get("candidates_per_worker", DEFAULT_K)),
            link_sr=link_sr, name=str(data.get("name", name)))
    except ConfigError as exc:
        problems.extend(exc.problems)
        config = None
    if problems:
        raise ConfigError(problems)
    return config


def load_system_config(path) -> SystemConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from None
    return config_from_dict(data, name=path.stem)


def config_to_dict(config: SystemConfig) -> dict:
    out = {
        "name": config.name,
        "default_sr": config.default_sr,
        "max_links": config.max_links,
        "candidates_per_worker": config.candidates_per_worker,
        "workers": [
            {"id": w.worker_id, "name": w.name, "qubits": w.n_qubits,
             "edges": [list(e) for e in w.coupling_edges],
             "err_1q": list(w.err_1q),
             "err_2q": {f"{a}-{b}": p for (a, b), p in sorted(w.err_2q.items())},
             "err_readout": list(w.err_readout)}
            for w in config.workers],
    }
    if config.link_sr:
        out["link_sr"] = {f"{wa}:{qa}-{wb}:{qb}": sr
                          for (wa, qa, wb, qb), sr in sorted(config.link_sr.items())}
    return out


BUNDLED_DIR = Path(__file__).parent / "configs"


def bundled_config(name: str) -> SystemConfig:
    """Load one of the shipped synthetic configs by stem, e.g. ``"3workers"``."""
    return load_system_config(BUNDLED_DIR / f"{name}.json")


@dataclass(frozen=True, order=True)
class EprLink:
    worker_a: int
    qubit_a: int
    worker_b: int
    qubit_b: int
    sr: float = DEFAULT_SR

    def __post_init__(self):
        if self.worker_a == self.worker_b:
            raise ValueError(f"EPR link must join distinct workers, got worker {self.worker_a} twice")
        if self.worker_a > self.worker_b:
            wa, qa, wb, qb = self.worker_b, self.qubit_b, self.worker_a, self.qubit_a
            object.__setattr__(self, "worker_a", wa)
            object.__setattr__(self, "qubit_a", qa)
            object.__setattr__(self, "worker_b", wb)
            object.__setattr__(self, "qubit_b", qb)

    @property
    def endpoints(self) -> tuple[tuple[int, int], tuple[int, int]]:
        return (self.worker_a, self.qubit_a), (self.worker_b, self.qubit_b)

    def label(self) -> str:
        return f"w{self.worker_a}:q{self.qubit_a}-w{self.worker_b}:q{self.qubit_b}"


@dataclass(frozen=True)
class EprCandidate:
    links: tuple[EprLink, ...]
    candidate_index: int = 0

    def label(self) -> str:
        return "+".join(link.label() for link in self.links)


def _components(n_workers: int, links) -> list[set[int]]:
    parent = list(range(n_workers))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for link in links:
        parent[find(link.worker_a)] = find(link.worker_b)
    groups: dict[int, set[int]] = {}
    for w in range(n_workers):
        groups.setdefault(find(w), set()).add(w)
    return sorted(groups.values(), key=min)


def worker_components(config: SystemConfig, links) -> list[tuple[int, ...]]:
    """Groups of workers joined by ``links``, each sorted, ordered by lowest id."""
    return [tuple(sorted(c)) for c in _components(len(config.workers), links)]


def enumerate_epr_candidates(config: SystemConfig, n_qubits: int | None = None) -> list[EprCandidate]:
    """All link sets of size 1..max_links over the k best qubits of each worker.

    With ``n_qubits`` given, sets whose largest worker component holds fewer than
    ``n_qubits`` physical qubits are dropped. Order: ascending sum of endpoint
    quality scores, then enumeration order; ``candidate_index`` is the final position.
    """
    workers = config.workers
    if len(workers) < 2:
        raise ValueError("EPR candidates need at least 2 workers")
    k = config.candidates_per_worker
    top = [w.ranked_qubits[:k] for w in workers]
    links = []
    for wa, wb in itertools.combinations(range(len(workers)), 2):
        for qa in top[wa]:
            for qb in top[wb]:
                links.append(EprLink(wa, qa, wb, qb, config.sr_for(wa, qa, wb, qb)))

    def score(link_set):
        return sum(workers[w].quality[q] for link in link_set for w, q in link.endpoints)

    raw = []
    for size in range(1, config.max_links + 1):
        for link_set in itertools.combinations(links, size):
            used = [ep for link in link_set for ep in link.endpoints]
            if len(set(used)) != len(used):
                continue
            if n_qubits is not None:
                caps = [sum(workers[w].n_qubits for w in comp)
                        for comp in _components(len(workers), link_set)]
                if max(caps) < n_qubits:
                    continue
            raw.append(link_set)
    order = sorted(range(len(raw)), key=lambda i: (round(score(raw[i]), 12), i))
    return [EprCandidate(raw[i], pos) for pos, i in enumerate(order)]


@dataclass(frozen=True, eq=False)
class VirtualSystemTopology:
    workers: tuple[WorkerSpec, ...]
    links: tuple[EprLink, ...]
    offsets: tuple[int, ...]
    node_tags: tuple[tuple[int, int], ...]
    intra_edges: tuple[tuple[int, int], ...]
    epr_edges: dict[tuple[int, int], float]

    # value equality; the cached views in __dict__ take no part
    def __eq__(self, other):
        if not isinstance(other, VirtualSystemTopology):
            return NotImplemented
        return (self.workers, self.links, self.epr_edges) == (other.workers, other.links,
                                                             other.epr_edges)

    def __hash__(self):
        return hash((self.workers, self.links))

    @property
    def n_nodes(self) -> int:
        return len(self.node_tags)

    def node(self, worker: int, qubit: int) -> int:
        return self.offsets[worker] + qubit

    def worker_of(self, node: int) -> int:
        return self.node_tags[node][0]

    def nodes_of(self, worker: int) -> range:
        return range(self.offsets[worker], self.offsets[worker] + self.workers[worker].n_qubits)

    @cached_property
    def edges(self) -> tuple[tuple[int, int], ...]:
        return tuple(sorted(set(self.intra_edges) | set(self.epr_edges)))

    @cached_property
    def edge_set(self) -> frozenset[tuple[int, int]]:
        return frozenset(self.edges)

    def is_edge(self, a: int, b: int) -> bool:
        return _pair(a, b) in self.edge_set

    def is_epr_edge(self, a: int, b: int) -> bool:
        return _pair(a, b) in self.epr_edges

    @cached_property
    def adjacency(self) -> tuple[tuple[int, ...], ...]:
        adj: list[set[int]] = [set() for _ in range(self.n_nodes)]
        for a, b in self.edges:
            adj[a].add(b)
            adj[b].add(a)
        return tuple(tuple(sorted(s)) for s in adj)

    @cached_property
    def node_quality(self) -> np.ndarray:
        return np.array([self.workers[w].quality[q] for w, q in self.node_tags])

    @cached_property
    def node_err_1q(self) -> np.ndarray:
        return np.array([self.workers[w].err_1q[q] for w, q in self.node_tags])

    @cached_property
    def node_err_readout(self) -> np.ndarray:
        return np.array([self.workers[w].err_readout[q] for w, q in self.node_tags])

    def edge_error(self, a: int, b: int) -> float:
        """Two-qubit error on an edge; EPR edges report 1 - sr."""
        e = _pair(a, b)
        if e in self.epr_edges:
            return 1.0 - self.epr_edges[e]
        wa, qa = self.node_tags[a]
        wb, qb = self.node_tags[b]
        if wa != wb:
            raise KeyError(f"no edge between nodes {a} and {b}")
        return self.workers[wa].err_2q[_pair(qa, qb)]

    def distances(self, w_epr: float = 1.0) -> np.ndarray:
        """All-pairs shortest paths, intra-worker edges weight 1, EPR edges ``w_epr``."""
        cache = self.__dict__.setdefault("_dist_cache", {})
        key = w_epr
        if key not in cache:
            rows, cols, vals = [], [], []
            for a, b in self.edges:
                w = w_epr if (a, b) in self.epr_edges else 1.0
                rows += [a, b]
                cols += [b, a]
                vals += [w, w]
            graph = csr_matrix((vals, (rows, cols)), shape=(self.n_nodes, self.n_nodes))
            cache[key] = shortest_path(graph, method="D", directed=False)
        return cache[key]

    @cached_property
    def components(self) -> list[tuple[int, ...]]:
        """Worker groups connected through EPR links."""
        return [tuple(sorted(c)) for c in _components(len(self.workers), self.links)]

    def node_components(self) -> np.ndarray:
        rows = [a for a, _ in self.edges]
        cols = [b for _, b in self.edges]
        graph = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(self.n_nodes, self.n_nodes))
        return connected_components(graph, directed=False)[1]


def con_vst(config: SystemConfig, candidate: EprCandidate | None) -> VirtualSystemTopology:
    """Union every worker topology and add one edge per EPR link of ``candidate``."""
    workers = config.workers
    offsets, tags, total = [], [], 0
    for w in workers:
        offsets.append(total)
        tags += [(w.worker_id, q) for q in range(w.n_qubits)]
        total += w.n_qubits
    intra = sorted((offsets[w.worker_id] + a, offsets[w.worker_id] + b)
                   for w in workers for a, b in w.coupling_edges)
    links = tuple(candidate.links) if candidate is not None else ()
    epr: dict[tuple[int, int], float] = {}
    for link in links:
        for w, q in link.endpoints:
            if not 0 <= w < len(workers):
                raise ValueError(f"link {link.label()}: no worker {w}")
            if not 0 <= q < workers[w].n_qubits:
                raise ValueError(f"link {link.label()}: qubit {q} out of range for worker {w}")
        edge = _pair(offsets[link.worker_a] + link.qubit_a, offsets[link.worker_b] + link.qubit_b)
        if edge in epr:
            raise ValueError(f"duplicate EPR link {link.label()}")
        epr[edge] = link.sr
    return VirtualSystemTopology(
        workers=workers, links=links, offsets=tuple(offsets), node_tags=tuple(tags),
        intra_edges=tuple(intra), epr_edges=dict(sorted(epr.items())))
