import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _util import random_lowered, random_mixed
from dismap.benchmarks import (adder_bits, adder_layout, bernstein_vazirani, generate_benchmark,
                               hwea, qaoa_maxcut, random_regular_edges)
from dismap.circuit import (Circuit, CircuitError, Gate, GateKind, interaction_graph, lower,
                            lower_gate)
from dismap.qasm import QasmError, emit_qasm, parse_qasm
from dismap.simulator import equal_up_to_phase, statevector

K = GateKind


# ---------------------------------------------------------------- types

def test_gate_arity_checked():
    with pytest.raises(CircuitError):
        Gate(K.CX, (0,))
    with pytest.raises(CircuitError):
        Gate(K.CX, (1, 1))
    with pytest.raises(CircuitError):
        Gate(K.RZ, (0,))  # missing angle


def test_circuit_rejects_out_of_range_qubit():
    with pytest.raises(CircuitError):
        Circuit(2, [Gate(K.CX, (0, 2))])


def test_gate_after_measure_on_same_qubit_rejected():
    with pytest.raises(CircuitError):
        Circuit(1, [Gate(K.MEASURE, (0,)), Gate(K.H, (0,))])
    # other qubits may still be acted on
    Circuit(2, [Gate(K.MEASURE, (0,)), Gate(K.H, (1,))])


# ---------------------------------------------------------------- qasm

def test_parse_cx():
    c = parse_qasm("OPENQASM 2.0; qreg q[2]; cx q[0],q[1];")
    assert c.n_qubits == 2
    assert c.gates == (Gate(K.CX, (0, 1)),)


def test_parse_rz():
    c = parse_qasm("OPENQASM 2.0; qreg q[1]; rz(0.5) q[0];")
    assert c.gates == (Gate(K.RZ, (0,), (0.5,)),)


def test_parse_index_out_of_range():
    with pytest.raises(QasmError, match="out of range"):
        parse_qasm("OPENQASM 2.0; qreg q[2]; cx q[0],q[5];")


def test_parse_expressions_and_broadcast():
    text = """OPENQASM 2.0;
include "qelib1.inc";
qreg q[3];
creg c[3];
h q;
rx(-pi/2) q[1];
ry(2*pi/4 + 0.25) q[2];
barrier q;
measure q[0] -> c[0];
"""
    c = parse_qasm(text)
    assert [g.kind for g in c.gates[:3]] == [K.H] * 3
    assert c.gates[3].params[0] == pytest.approx(-math.pi / 2)
    assert c.gates[4].params[0] == pytest.approx(math.pi / 2 + 0.25)
    assert c.gates[-1] == Gate(K.MEASURE, (0,))


@pytest.mark.parametrize("text, needle", [
    ("OPENQASM 2.0; qreg q[2]; foo q[0];", "unsupported gate"),
    ("OPENQASM 2.0; qreg q[2]; qreg r[2];", "register"),
    ("OPENQASM 2.0; qreg q[2]; creg c[2]; if(c==1) x q[0];", "if"),
    ("OPENQASM 2.0; qreg q[2]; reset q[0];", "reset"),
    ("OPENQASM 2.0; qreg q[2]; cx q[0] q[1];", "expected ';'"),
])
def test_parse_errors(text, needle):
    with pytest.raises(QasmError, match=needle):
        parse_qasm(text)


def test_parse_error_reports_position():
    with pytest.raises(QasmError) as info:
        parse_qasm("OPENQASM 2.0;\nqreg q[2];\n  bogus q[0];\n")
    assert info.value.line == 3
    assert info.value.col == 3


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 6), st.integers(0, 30), st.integers(0, 10_000))
def test_qasm_round_trip(n, n_gates, seed):
    c = random_mixed(n, n_gates, random.Random(seed))
    text = emit_qasm(c)
    again = parse_qasm(text, c.name)
    assert again == c
    assert parse_qasm(emit_qasm(again), c.name) == again


# ---------------------------------------------------------------- lowering

def test_lower_swap():
    assert lower_gate(Gate(K.SWAP, (0, 1))) == [
        Gate(K.CX, (0, 1)), Gate(K.CX, (1, 0)), Gate(K.CX, (0, 1))]


def test_lower_rzz():
    assert lower_gate(Gate(K.RZZ, (0, 1), (0.7,))) == [
        Gate(K.CX, (0, 1)), Gate(K.RZ, (1,), (0.7,)), Gate(K.CX, (0, 1))]


def test_lower_cz():
    assert lower_gate(Gate(K.CZ, (0, 1))) == [
        Gate(K.H, (1,)), Gate(K.CX, (0, 1)), Gate(K.H, (1,))]


def test_lower_ccx_has_six_cx_and_matches_toffoli():
    ops = lower_gate(Gate(K.CCX, (0, 1, 2)))
    assert sum(g.kind is K.CX for g in ops) == 6
    assert all(g.kind in (K.CX, K.H, K.T, K.TDG) for g in ops)
    for bits in range(8):
        prep = [Gate(K.X, (q,)) for q in range(3) if bits >> (2 - q) & 1]
        a = statevector(Circuit(3, prep + [Gate(K.CCX, (0, 1, 2))]))
        b = statevector(Circuit(3, prep + ops))
        assert equal_up_to_phase(a, b)


def test_lower_keeps_untouched_gate_order():
    gates = [Gate(K.H, (0,)), Gate(K.CX, (0, 1)), Gate(K.T, (1,)), Gate(K.MEASURE, (0,))]
    assert lower(Circuit(2, gates)).gates == tuple(gates)


@settings(max_examples=60, deadline=None)
@given(st.integers(3, 8), st.integers(0, 40), st.integers(0, 10_000))
def test_lowering_preserves_state(n, n_gates, seed):
    c = random_mixed(n, n_gates, random.Random(seed))
    low = lower(c)
    assert low.is_lowered
    assert equal_up_to_phase(statevector(c), statevector(low))


# ---------------------------------------------------------------- interaction graph

def test_interaction_graph_counts():
    c = Circuit(3, [Gate(K.CX, (0, 1)), Gate(K.CX, (1, 0)), Gate(K.CX, (1, 2))])
    assert interaction_graph(c).edge_weights == {(0, 1): 2, (1, 2): 1}


def test_interaction_graph_empty_and_ghz():
    assert interaction_graph(Circuit(2, [Gate(K.H, (0,))])).edge_weights == {}
    ghz = Circuit(4, [Gate(K.CX, (i, i + 1)) for i in range(3)])
    assert interaction_graph(ghz).edge_weights == {(0, 1): 1, (1, 2): 1, (2, 3): 1}


def test_interaction_graph_needs_lowered_input():
    with pytest.raises(CircuitError):
        interaction_graph(Circuit(2, [Gate(K.SWAP, (0, 1))]))


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 10), st.integers(0, 50), st.integers(0, 10_000))
def test_interaction_weight_equals_cx_count(n, n_gates, seed):
    low = lower(random_mixed(n, n_gates, random.Random(seed)))
    ig = interaction_graph(low)
    assert ig.total_weight == sum(g.kind is K.CX for g in low.gates)
    assert all(a < b for a, b in ig.edge_weights)


# ---------------------------------------------------------------- benchmarks

def test_bv_textbook_order():
    c = bernstein_vazirani(3, "11")
    kinds = [(g.kind, g.qubits) for g in c.gates]
    assert kinds == [(K.H, (0,)), (K.H, (1,)), (K.X, (2,)), (K.H, (2,)), (K.CX, (0, 2)),
                     (K.CX, (1, 2)), (K.H, (0,)), (K.H, (1,)),
                     (K.MEASURE, (0,)), (K.MEASURE, (1,))]


@pytest.mark.parametrize("hidden", ["1011", "0001", "1111"])
def test_bv_recovers_hidden_string(hidden):
    c = bernstein_vazirani(len(hidden) + 1, hidden)
    psi = statevector(c).reshape((2,) * (len(hidden) + 1))
    probs = (abs(psi) ** 2).sum(axis=-1)  # trace out the ancilla
    idx = tuple(int(b) for b in hidden)
    assert probs[idx] == pytest.approx(1.0)


def test_hwea_shape():
    c = hwea(4)
    counts = c.count_ops()
    assert counts["ry"] == 4 and counts["rz"] == 4
    assert [g.qubits for g in c.gates if g.kind is K.CX] == [(0, 1), (1, 2), (2, 3)]


def test_qaoa_six_nodes_seed1_has_nine_rzz():
    c = qaoa_maxcut(6, seed=1)
    rzz = [g for g in c.gates if g.kind is K.RZZ]
    edges = random_regular_edges(6, 3, random.Random(1))
    assert len(rzz) == len(edges) == 9
    degree = [0] * 6
    for a, b in edges:
        degree[a] += 1
        degree[b] += 1
    assert degree == [3] * 6


@pytest.mark.parametrize("n", [5, 7, 9, 11])
def test_odd_qaoa_graph_is_near_regular(n):
    edges = random_regular_edges(n, 3, random.Random(0))
    degree = [0] * n
    for a, b in edges:
        degree[a] += 1
        degree[b] += 1
    assert sorted(degree) == [2] + [3] * (n - 1)


@pytest.mark.parametrize("n, seed", [(6, 0), (8, 3), (10, 5), (9, 1)])
def test_adder_adds(n, seed):
    c = generate_benchmark("adder", n, seed)
    m = adder_bits(n)
    cin, a, b, cout = adder_layout(m)
    xs = {g.qubits[0] for g in c.gates if g.kind is K.X}
    a_val = sum(1 << i for i in range(m) if a[i] in xs)
    b_val = sum(1 << i for i in range(m) if b[i] in xs)
    psi = statevector(c)
    index = int(np.argmax(abs(psi)))
    assert abs(psi[index]) == pytest.approx(1.0)
    bits = [(index >> (n - 1 - q)) & 1 for q in range(n)]
    total = sum(bits[b[i]] << i for i in range(m)) + (bits[cout] << m)
    assert total == a_val + b_val
    assert [bits[a[i]] for i in range(m)] == [(a_val >> i) & 1 for i in range(m)]


@pytest.mark.parametrize("kind", ["bv", "hwea", "qaoa", "adder"])
def test_generators_deterministic(kind):
    assert generate_benchmark(kind, 12, 7) == generate_benchmark(kind, 12, 7)


@pytest.mark.parametrize("kind, n", [("bv", 1), ("qaoa", 1), ("adder", 3), ("nope", 5)])
def test_generator_rejects_bad_sizes(kind, n):
    with pytest.raises(ValueError):
        generate_benchmark(kind, n, 0)


def test_lowered_random_circuits_are_lowered():
    c = random_lowered(5, 30, random.Random(2), measure=True)
    assert c.is_lowered and c.measured_qubits() == list(range(5))
