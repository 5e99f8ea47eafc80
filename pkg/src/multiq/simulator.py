"""Dense statevector simulation with post-selection.

Amplitude layout is little-endian: qubit 0 is the least significant bit of the
flat statevector index.  Internally the state is viewed as a rank-n tensor of
shape (2,)*n whose axis for qubit q is n-1-q.  Gates act in place on strided
views; post-selection projects the selected qubits onto bit 0 at the end,
which is equivalent to projecting at the gate site because no later gate
touches a post-selected qubit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ansatz import Circuit, Gate, GateKind, gate_matrix
from .errors import QubitCapExceeded, UnboundSlot

QUBIT_CAP = 24
VANISH_THRESHOLD = 1e-9


@dataclass(frozen=True)
class EvalResult:
    p_match: float
    postselect_weight: float
    vanished: bool


def _axis(qubit: int, n: int) -> int:
    return n - 1 - qubit


def _apply_2x2(view: np.ndarray, mat: np.ndarray, axis: int) -> None:
    # view is any tensor slice; applies the 2x2 matrix along `axis` in place.
    idx0 = [slice(None)] * view.ndim
    idx1 = [slice(None)] * view.ndim
    idx0[axis], idx1[axis] = 0, 1
    a, b = view[tuple(idx0)], view[tuple(idx1)]
    new_a = mat[0, 0] * a + mat[0, 1] * b
    new_b = mat[1, 0] * a + mat[1, 1] * b
    view[tuple(idx0)] = new_a
    view[tuple(idx1)] = new_b


def apply_gate(state: np.ndarray, gate: Gate, n_qubits: int) -> np.ndarray:
    """Apply one concrete-angled gate to a flat statevector, in place."""
    for q in (gate.target, gate.control):
        if q is not None and not (0 <= q < n_qubits):
            raise IndexError(f"qubit {q} out of range for {n_qubits} qubits")
    tensor = state.reshape((2,) * n_qubits)
    if gate.control is None:
        _apply_2x2(tensor, gate_matrix(gate), _axis(gate.target, n_qubits))
        return state
    # Controlled gate: restrict to the control=1 slice, then act on the target
    # axis of that half.
    ctrl_axis = _axis(gate.control, n_qubits)
    idx = [slice(None)] * n_qubits
    idx[ctrl_axis] = 1
    sub = tensor[tuple(idx)]
    t_axis = _axis(gate.target, n_qubits)
    if t_axis > ctrl_axis:
        t_axis -= 1
    mat = gate_matrix(gate)[2:, 2:]  # the block applied when control = 1
    _apply_2x2(sub, mat, t_axis)
    return state


def _bind(gate: Gate, bindings) -> Gate:
    if gate.slot is None:
        return gate
    try:
        angle = float(bindings[gate.slot])
    except (KeyError, IndexError):
        raise UnboundSlot(f"no binding for slot {gate.slot}") from None
    return Gate(gate.kind, gate.target, control=gate.control, angle=angle)


def evaluate(c: Circuit, bindings) -> EvalResult:
    """Run a circuit from |0...0>, post-select, and read the output qubit.

    `bindings` maps slot ids to angles (an array indexed by slot works).
    Returns the probability that the measured qubit reads 1 after projecting
    every post-selected qubit onto 0 and renormalizing.  When the surviving
    squared norm falls below 1e-9 the result is flagged vanished and the
    probability pinned at 0.5 so downstream losses stay finite.
    """
    n = c.n_qubits
    if n > QUBIT_CAP:
        raise QubitCapExceeded(f"{n} qubits exceeds cap of {QUBIT_CAP}")
    state = np.zeros(2**n, dtype=complex)
    state[0] = 1.0
    for gate in c.gates:
        apply_gate(state, _bind(gate, bindings), n)

    tensor = state.reshape((2,) * n)
    idx = [slice(None)] * n
    for q in c.postselect:
        idx[_axis(q, n)] = 0
    projected = tensor[tuple(idx)]
    weight = float(np.sum(np.abs(projected) ** 2))
    if weight < VANISH_THRESHOLD:
        return EvalResult(p_match=0.5, postselect_weight=weight, vanished=True)

    m_axis = _axis(c.measure, n) - sum(1 for q in c.postselect if _axis(q, n) < _axis(c.measure, n))
    one = [slice(None)] * projected.ndim
    one[m_axis] = 1
    p1 = float(np.sum(np.abs(projected[tuple(one)]) ** 2)) / weight
    return EvalResult(p_match=min(max(p1, 0.0), 1.0), postselect_weight=weight, vanished=False)


def final_state(c: Circuit, bindings) -> np.ndarray:
    """Statevector after all gates, before post-selection (debug/tracing)."""
    n = c.n_qubits
    if n > QUBIT_CAP:
        raise QubitCapExceeded(f"{n} qubits exceeds cap of {QUBIT_CAP}")
    state = np.zeros(2**n, dtype=complex)
    state[0] = 1.0
    for gate in c.gates:
        apply_gate(state, _bind(gate, bindings), n)
    return state
