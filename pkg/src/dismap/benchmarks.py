"""Benchmark circuit families: BV, HWEA, QAOA (depth 1) and a ripple-carry ADDER."""
from __future__ import annotations

import math
import random

from .circuit import Circuit, Gate, GateKind

K = GateKind
FAMILIES = ("bv", "hwea", "qaoa", "adder")


def _measure_all(qubits) -> list[Gate]:
    return [Gate(K.MEASURE, (q,)) for q in qubits]


def bernstein_vazirani(n_qubits: int, hidden: str) -> Circuit:
    """Data qubits 0..n-2, ancilla n-1 prepared in |->; ``hidden[i]`` is the bit for qubit i."""
    n_data = n_qubits - 1
    if len(hidden) != n_data or set(hidden) - {"0", "1"}:
        raise ValueError(f"hidden string must be {n_data} bits, got {hidden!r}")
    anc = n_qubits - 1
    gates = [Gate(K.H, (q,)) for q in range(n_data)]
    gates += [Gate(K.X, (anc,)), Gate(K.H, (anc,))]
    gates += [Gate(K.CX, (q, anc)) for q in range(n_data) if hidden[q] == "1"]
    gates += [Gate(K.H, (q,)) for q in range(n_data)]
    gates += _measure_all(range(n_data))
    return Circuit(n_qubits, gates, f"bv_{n_qubits}")


def hwea(n_qubits: int, layers: int = 1, seed: int = 0) -> Circuit:
    rng = random.Random(seed)
    gates: list[Gate] = []
    for _ in range(layers):
        gates += [Gate(K.RY, (q,), (rng.uniform(0, 2 * math.pi),)) for q in range(n_qubits)]
        gates += [Gate(K.RZ, (q,), (rng.uniform(0, 2 * math.pi),)) for q in range(n_qubits)]
        gates += [Gate(K.CX, (q, q + 1)) for q in range(n_qubits - 1)]
    gates += _measure_all(range(n_qubits))
    return Circuit(n_qubits, gates, f"hwea_{n_qubits}")


def random_regular_edges(n: int, degree: int, rng: random.Random) -> list[tuple[int, int]]:
    """Simple random ``degree``-regular graph by the pairing model with restarts.

    For odd ``n * degree`` the last node gets degree ``degree - 1``: a regular graph
    is drawn on n-1 nodes, one edge (u, v) is removed and u, v are joined to node n-1.
    """
    if n * degree % 2:
        edges = random_regular_edges(n - 1, degree, rng)
        u, v = edges.pop(rng.randrange(len(edges)))
        edges += [(u, n - 1), (v, n - 1)]
        return sorted(edges)
    for _ in range(10000):
        stubs = [v for v in range(n) for _ in range(degree)]
        rng.shuffle(stubs)
        edges = set()
        ok = True
        for a, b in zip(stubs[::2], stubs[1::2]):
            e = (min(a, b), max(a, b))
            if a == b or e in edges:
                ok = False
                break
            edges.add(e)
        if ok:
            return sorted(edges)
    raise RuntimeError(f"could not draw a {degree}-regular graph on {n} nodes")


def qaoa_maxcut(n_qubits: int, seed: int = 0) -> Circuit:
    rng = random.Random(seed)
    degree = min(3, n_qubits - 1)
    edges = random_regular_edges(n_qubits, degree, rng)
    gamma = rng.uniform(0, math.pi)
    beta = rng.uniform(0, math.pi)
    gates = [Gate(K.H, (q,)) for q in range(n_qubits)]
    gates += [Gate(K.RZZ, e, (2 * gamma,)) for e in edges]
    gates += [Gate(K.RX, (q,), (2 * beta,)) for q in range(n_qubits)]
    gates += _measure_all(range(n_qubits))
    return Circuit(n_qubits, gates, f"qaoa_{n_qubits}")


def adder_bits(n_qubits: int) -> int:
    return (n_qubits - 2) // 2


def adder_layout(n_bits: int) -> tuple[int, list[int], list[int], int]:
    """Interleaved register layout: cin, b0, a0, b1, a1, ..., cout."""
    cin = 0
    b = [1 + 2 * i for i in range(n_bits)]
    a = [2 + 2 * i for i in range(n_bits)]
    return cin, a, b, 2 * n_bits + 1


def cuccaro_adder(n_qubits: int, seed: int = 0) -> Circuit:
    """Ripple-carry adder computing b <- a + b with the carry out on the last used qubit.

    Inputs a, b are drawn from ``seed`` and loaded with X gates. With odd
    ``n_qubits`` the final qubit is idle.
    """
    m = adder_bits(n_qubits)
    if n_qubits < 4 or m < 1:
        raise ValueError(f"adder needs at least 4 qubits, got {n_qubits}")
    rng = random.Random(seed)
    a_val, b_val = rng.getrandbits(m), rng.getrandbits(m)
    cin, a, b, cout = adder_layout(m)

    def maj(x, y, z):
        return [Gate(K.CX, (z, y)), Gate(K.CX, (z, x)), Gate(K.CCX, (x, y, z))]

    def uma(x, y, z):
        return [Gate(K.CCX, (x, y, z)), Gate(K.CX, (z, x)), Gate(K.CX, (x, y))]

    gates = [Gate(K.X, (a[i],)) for i in range(m) if a_val >> i & 1]
    gates += [Gate(K.X, (b[i],)) for i in range(m) if b_val >> i & 1]
    gates += maj(cin, b[0], a[0])
    for i in range(1, m):
        gates += maj(a[i - 1], b[i], a[i])
    gates.append(Gate(K.CX, (a[m - 1], cout)))
    for i in range(m - 1, 0, -1):
        gates += uma(a[i - 1], b[i], a[i])
    gates += uma(cin, b[0], a[0])
    gates += _measure_all(b + [cout])
    return Circuit(n_qubits, gates, f"adder_{n_qubits}")


def generate_benchmark(kind: str, n_qubits: int, seed: int = 0) -> Circuit:
    kind = kind.lower()
    if kind not in FAMILIES:
        raise ValueError(f"unknown benchmark family {kind!r}; choose from {', '.join(FAMILIES)}")
    if kind == "adder":
        if n_qubits < 4:
            raise ValueError(f"adder needs at least 4 qubits, got {n_qubits}")
        return cuccaro_adder(n_qubits, seed)
    if n_qubits < 2:
        raise ValueError(f"{kind} needs at least 2 qubits, got {n_qubits}")
    if kind == "bv":
        rng = random.Random(seed)
        bits = [rng.randint(0, 1) for _ in range(n_qubits - 1)]
        if not any(bits):
            bits[rng.randrange(len(bits))] = 1
        return bernstein_vazirani(n_qubits, "".join(map(str, bits)))
    if kind == "hwea":
        return hwea(n_qubits, seed=seed)
    return qaoa_maxcut(n_qubits, seed)
