"""Diagram-to-circuit compilation with the Sim14 rotation/entangling template.

One Sim14 layer over k qubits emits, in order: RY on every qubit, a CRX ring
with each qubit controlling its lower neighbour (wrapping), RY on every qubit,
and a CRX ring with each qubit controlling its upper neighbour.  That is
4*k*layers parameters; on a single qubit the rings degenerate to plain RX so
the count stays uniform.  Word boxes get trainable slots, the image state gets
fixed angles derived from its feature vector, cups become Bell effects
(CNOT + H + post-selection), and spiders become CNOT cascades with the
absorbed wires post-selected to 0.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ArityError, MissingFeatures, ShapeError
from .diagram import OUTPUT, Box, BoxKind, Diagram, ModelKind, attach_comparison, build_diagram, validate
from .grammar import AtomicType, Lexicon, PregroupType, parse_sentence


class GateKind(Enum):
    RY = "ry"
    RX = "rx"
    RZ = "rz"
    CRX = "crx"
    CNOT = "cnot"
    H = "h"


ROTATIONS = (GateKind.RY, GateKind.RX, GateKind.RZ, GateKind.CRX)


@dataclass(frozen=True)
class Slot:
    """Reference to a trainable parameter slot."""

    index: int


@dataclass(frozen=True)
class Gate:
    kind: GateKind
    target: int
    control: int | None = None
    angle: float | None = None
    slot: int | None = None

    def __post_init__(self):
        if self.control is not None and self.control == self.target:
            raise ShapeError(f"{self.kind.value}: control equals target {self.target}")
        if self.kind in ROTATIONS:
            if (self.angle is None) == (self.slot is None):
                raise ShapeError(f"{self.kind.value} needs exactly one of angle/slot")
        elif self.angle is not None or self.slot is not None:
            raise ShapeError(f"{self.kind.value} takes no angle")


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    gates: tuple[Gate, ...]
    postselect: tuple[int, ...]  # qubits required to read bit 0
    measure: int

    def __post_init__(self):
        if self.measure in self.postselect:
            raise ShapeError(f"measured qubit {self.measure} is post-selected")
        if not (0 <= self.measure < self.n_qubits):
            raise ShapeError(f"measured qubit {self.measure} out of range")

    def slots(self) -> set[int]:
        return {g.slot for g in self.gates if g.slot is not None}

    def to_dict(self) -> dict:
        return {
            "n_qubits": self.n_qubits,
            "gates": [
                {
                    "kind": g.kind.value,
                    "target": g.target,
                    **({"control": g.control} if g.control is not None else {}),
                    **({"angle": g.angle} if g.angle is not None else {}),
                    **({"slot": g.slot} if g.slot is not None else {}),
                }
                for g in self.gates
            ],
            "postselect": [{"qubit": q, "bit": 0} for q in self.postselect],
            "measure": self.measure,
            # Amplitude layout of the simulator: qubit 0 is the least
            # significant bit of the statevector index.
            "endianness": "little",
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def gate_matrix(gate: Gate) -> np.ndarray:
    """Concrete unitary of a gate: 2x2, or 4x4 on the |control,target> basis."""
    if gate.angle is None and gate.kind in ROTATIONS:
        raise ShapeError("gate has an unbound slot")
    t = gate.angle if gate.angle is not None else 0.0
    c, s = np.cos(t / 2), np.sin(t / 2)
    if gate.kind is GateKind.RY:
        return np.array([[c, -s], [s, c]], dtype=complex)
    if gate.kind is GateKind.RX:
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
    if gate.kind is GateKind.RZ:
        return np.array([[np.exp(-1j * t / 2), 0], [0, np.exp(1j * t / 2)]], dtype=complex)
    if gate.kind is GateKind.H:
        return np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
    rx = np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    u = np.eye(4, dtype=complex)
    u[2:, 2:] = rx if gate.kind is GateKind.CRX else x
    return u


@dataclass(frozen=True)
class QubitMap:
    """Qubits per atomic type and the ansatz depth."""

    counts: dict[AtomicType, int] = field(
        default_factory=lambda: {
            AtomicType.NOUN: 1,
            AtomicType.SENTENCE: 1,
            AtomicType.PREPOSITIONAL_PHRASE: 1,
            AtomicType.IMAGE: 5,
        }
    )
    layers: int = 1

    def __post_init__(self):
        if self.layers < 1 or any(c < 1 for c in self.counts.values()):
            raise ShapeError("qubit counts and layers must be >= 1")

    def qubits_of_factor(self, factor: tuple[AtomicType, int]) -> int:
        return self.counts[factor[0]]

    def qubits_of(self, t: PregroupType) -> int:
        return sum(self.qubits_of_factor(f) for f in t.factors)

    @property
    def feature_dim(self) -> int:
        """Length of the image feature vector this map encodes."""
        return 4 * self.counts[AtomicType.IMAGE] * self.layers


def sim14_params(n_qubits: int, layers: int = 1) -> int:
    return 4 * n_qubits * layers


def sim14_layer(qubits, params, *, layers: int = 1) -> list[Gate]:
    """Emit the Sim14 gate sequence over `qubits`.

    `params` mixes fixed angles (floats) and trainable references (Slot); its
    length must be exactly 4 * len(qubits) * layers, consumed in emission
    order.
    """
    qubits = list(qubits)
    k = len(qubits)
    expected = sim14_params(k, layers)
    if len(params) != expected:
        raise ArityError(f"expected {expected} parameters for {k} qubits x {layers} layers, got {len(params)}")

    it = iter(params)

    def angle_kw():
        p = next(it)
        return {"slot": p.index} if isinstance(p, Slot) else {"angle": float(p)}

    gates: list[Gate] = []
    for _ in range(layers):
        for q in qubits:
            gates.append(Gate(GateKind.RY, q, **angle_kw()))
        for step in (-1, None, +1):
            if step is None:
                for q in qubits:
                    gates.append(Gate(GateKind.RY, q, **angle_kw()))
                continue
            for i in range(k):
                if k == 1:
                    gates.append(Gate(GateKind.RX, qubits[0], **angle_kw()))
                else:
                    gates.append(
                        Gate(GateKind.CRX, qubits[(i + step) % k], control=qubits[i], **angle_kw())
                    )
    return gates


def type_key(t: PregroupType) -> str:
    """Stable string form of a type, used to key word symbols."""
    return str(t)


def compile_diagram(d: Diagram, qmap: QubitMap, store, features=None) -> Circuit:
    """Compile a validated diagram into a gate-list circuit.

    `store` supplies trainable slot ranges via ``word_slots(label, type_key,
    n)`` and ``comparison_slots(n)``; `features` supplies fixed image angles
    via ``angles(image_id)`` and may be omitted for diagrams without an image
    state.  Compilation is deterministic given the same diagram and store.
    """
    validate(d)

    consumers: dict[tuple[int, int], tuple[int, int]] = {}
    output_srcs: dict[int, tuple[int, int]] = {}
    for w in d.wires:
        if w.dst[0] == OUTPUT:
            output_srcs[w.dst[1]] = w.src
        else:
            consumers[w.dst] = w.src

    port_qubits: dict[tuple[int, int], list[int]] = {}
    gates: list[Gate] = []
    postselect: list[int] = []
    n_alloc = 0

    def alloc(count: int) -> list[int]:
        nonlocal n_alloc
        qs = list(range(n_alloc, n_alloc + count))
        n_alloc += count
        return qs

    def dom_qubits(box_idx: int, port: int) -> list[int]:
        return port_qubits[consumers[(box_idx, port)]]

    for idx, box in enumerate(d.boxes):
        if box.kind is BoxKind.WORD:
            qs: list[int] = []
            for port, factor in enumerate(box.cod.factors):
                pq = alloc(qmap.qubits_of_factor(factor))
                port_qubits[(idx, port)] = pq
                qs.extend(pq)
            slots = store.word_slots(box.label, type_key(box.cod), sim14_params(len(qs), qmap.layers))
            gates.extend(sim14_layer(qs, [Slot(i) for i in slots], layers=qmap.layers))
        elif box.kind is BoxKind.CUP:
            left, right = dom_qubits(idx, 0), dom_qubits(idx, 1)
            if len(left) != len(right):
                raise ShapeError("cup joins registers of unequal width")
            # Bell effect per qubit pair: project onto (<00| + <11|)/sqrt(2).
            for qa, qb in zip(left, right):
                gates.append(Gate(GateKind.CNOT, qb, control=qa))
                gates.append(Gate(GateKind.H, qa))
                postselect.extend((qa, qb))
        elif box.kind is BoxKind.SPIDER:
            survivor = dom_qubits(idx, 0)
            if len(survivor) != 1:
                raise ShapeError("spider merge is defined on single-qubit wires")
            qs_keep = survivor[0]
            for port in range(1, len(box.dom)):
                (q_other,) = dom_qubits(idx, port)
                gates.append(Gate(GateKind.CNOT, q_other, control=qs_keep))
                postselect.append(q_other)
            port_qubits[(idx, 0)] = [qs_keep]
        elif box.kind is BoxKind.IMAGE_STATE:
            qs = alloc(qmap.counts[AtomicType.IMAGE])
            if features is None:
                raise MissingFeatures(box.label)
            angles = features.angles(box.label)
            if len(angles) != sim14_params(len(qs), qmap.layers):
                raise ShapeError(
                    f"feature dim {len(angles)} != {sim14_params(len(qs), qmap.layers)} image angles"
                )
            port_qubits[(idx, 0)] = qs
            gates.extend(sim14_layer(qs, [float(a) for a in angles], layers=qmap.layers))
        elif box.kind is BoxKind.COMPARISON:
            s_qs = dom_qubits(idx, 0)
            img_qs = dom_qubits(idx, 1)
            reg = s_qs + img_qs
            slots = store.comparison_slots(sim14_params(len(reg), qmap.layers))
            gates.extend(sim14_layer(reg, [Slot(i) for i in slots], layers=qmap.layers))
            postselect.extend(img_qs)
            port_qubits[(idx, 0)] = s_qs

    if set(output_srcs) != {0} or d.outputs.factors[0][0] is not AtomicType.SENTENCE:
        raise ShapeError(f"circuit needs a single sentence output, got {d.outputs}")
    (measure,) = port_qubits[output_srcs[0]]
    return Circuit(n_alloc, tuple(gates), tuple(postselect), measure)


class _CountingStore:
    """Slot allocator used for parameter audits; mirrors the trainer's store."""

    def __init__(self):
        self.n = 0
        self._words: dict[tuple[str, str], range] = {}
        self._comparison: range | None = None

    def word_slots(self, label: str, tkey: str, count: int) -> range:
        key = (label, tkey)
        if key not in self._words:
            self._words[key] = range(self.n, self.n + count)
            self.n += count
        return self._words[key]

    def comparison_slots(self, count: int) -> range:
        if self._comparison is None:
            self._comparison = range(self.n, self.n + count)
            self.n += count
        return self._comparison


class _ZeroFeatures:
    def __init__(self, dim: int):
        self.dim = dim

    def angles(self, image_id: str) -> np.ndarray:
        return np.zeros(self.dim)


def parameter_count(
    model: ModelKind,
    sentence: str,
    lexicon: Lexicon,
    qmap: QubitMap | None = None,
) -> int:
    """Number of distinct trainable slots in the full compiled pipeline circuit.

    Compiles the sentence under `model` with an image state and comparison box
    attached, then counts the unique slots the circuit references.
    """
    qmap = qmap or QubitMap()
    parse = parse_sentence(sentence, lexicon)
    d = attach_comparison(build_diagram(model, parse), "_probe")
    store = _CountingStore()
    circuit = compile_diagram(d, qmap, store, features=_ZeroFeatures(qmap.feature_dim))
    return len(circuit.slots())
