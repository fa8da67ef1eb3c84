"""Dense statevector simulation for desk-scale oracles (qubit 0 is the most significant axis)."""
from __future__ import annotations

import math

import numpy as np

from .circuit import Circuit, GateKind

K = GateKind
_S2 = 1 / math.sqrt(2)

FIXED_1Q = {
    K.H: np.array([[1, 1], [1, -1]], dtype=complex) * _S2,
    K.X: np.array([[0, 1], [1, 0]], dtype=complex),
    K.Y: np.array([[0, -1j], [1j, 0]], dtype=complex),
    K.Z: np.array([[1, 0], [0, -1]], dtype=complex),
    K.S: np.array([[1, 0], [0, 1j]], dtype=complex),
    K.SDG: np.array([[1, 0], [0, -1j]], dtype=complex),
    K.T: np.array([[1, 0], [0, np.exp(1j * math.pi / 4)]], dtype=complex),
    K.TDG: np.array([[1, 0], [0, np.exp(-1j * math.pi / 4)]], dtype=complex),
}
PAULIS = (np.eye(2, dtype=complex), FIXED_1Q[K.X], FIXED_1Q[K.Y], FIXED_1Q[K.Z])


def gate_matrix(kind: GateKind, params=()) -> np.ndarray:
    if kind in FIXED_1Q:
        return FIXED_1Q[kind]
    t = params[0] / 2
    c, s = math.cos(t), math.sin(t)
    if kind is K.RX:
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
    if kind is K.RY:
        return np.array([[c, -s], [s, c]], dtype=complex)
    if kind is K.RZ:
        return np.array([[np.exp(-1j * t), 0], [0, np.exp(1j * t)]], dtype=complex)
    raise ValueError(f"no single-qubit matrix for {kind.value}")


def zero_state(n: int) -> np.ndarray:
    psi = np.zeros((2,) * n, dtype=complex)
    psi[(0,) * n] = 1.0
    return psi


def apply_1q(psi: np.ndarray, matrix: np.ndarray, q: int) -> np.ndarray:
    psi = np.tensordot(matrix, psi, axes=([1], [q]))
    return np.moveaxis(psi, 0, q)


def apply_cx(psi: np.ndarray, c: int, t: int) -> np.ndarray:
    psi = psi.copy()
    idx = [slice(None)] * psi.ndim
    idx[c] = 1
    sub = psi[tuple(idx)]
    t_axis = t if t < c else t - 1
    psi[tuple(idx)] = np.flip(sub, axis=t_axis)
    return psi


def apply_swap(psi: np.ndarray, a: int, b: int) -> np.ndarray:
    return np.swapaxes(psi, a, b).copy()


def apply_gate(psi: np.ndarray, kind: GateKind, qubits, params=()) -> np.ndarray:
    if kind in (K.MEASURE, K.BARRIER):
        return psi
    if kind is K.CX:
        return apply_cx(psi, qubits[0], qubits[1])
    if kind is K.SWAP:
        return apply_swap(psi, qubits[0], qubits[1])
    if len(qubits) == 1:
        return apply_1q(psi, gate_matrix(kind, params), qubits[0])
    if kind is K.CZ:
        return _phase_where(psi, qubits, lambda a, b: -1.0 if a and b else 1.0)
    if kind is K.RZZ:
        t = params[0] / 2
        return _phase_where(psi, qubits, lambda a, b: np.exp(-1j * t * (1 - 2 * (a ^ b))))
    if kind is K.CCX:
        psi = psi.copy()
        idx = [slice(None)] * psi.ndim
        idx[qubits[0]] = idx[qubits[1]] = 1
        c0, c1, t = qubits
        t_axis = t - sum(1 for c in (c0, c1) if c < t)
        psi[tuple(idx)] = np.flip(psi[tuple(idx)], axis=t_axis)
        return psi
    raise ValueError(f"cannot simulate {kind.value}")


def _phase_where(psi, qubits, phase) -> np.ndarray:
    psi = psi.copy()
    for a in (0, 1):
        for b in (0, 1):
            idx = [slice(None)] * psi.ndim
            idx[qubits[0]], idx[qubits[1]] = a, b
            psi[tuple(idx)] *= phase(a, b)
    return psi


def apply_pauli(psi: np.ndarray, paulis, qubits) -> np.ndarray:
    for p, q in zip(paulis, qubits):
        if p:
            psi = apply_1q(psi, PAULIS[p], q)
    return psi


def statevector(circuit: Circuit) -> np.ndarray:
    """Final state of ``circuit`` ignoring measurements, as a flat vector."""
    psi = zero_state(circuit.n_qubits)
    for g in circuit.gates:
        psi = apply_gate(psi, g.kind, g.qubits, g.params)
    return psi.reshape(-1)


def overlap(a: np.ndarray, b: np.ndarray) -> float:
    """|<a|b>| for normalized states; 1 means equal up to global phase."""
    return float(abs(np.vdot(a.reshape(-1), b.reshape(-1))))


def equal_up_to_phase(a: np.ndarray, b: np.ndarray, tol: float = 1e-9) -> bool:
    return overlap(a, b) >= 1.0 - tol
