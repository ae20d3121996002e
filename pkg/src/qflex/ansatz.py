"""Declarative layered-circuit construction.

Two model families share one tunable block: per-qubit X, Y, Z rotations
followed by Ising XX/YY/ZZ entanglers over every qubit pair in ascending
lexicographic order.  A pure data re-uploading (PDR) layer prepends one
X-rotation data encoder per qubit; the weight-coupled (aCLS) layer instead
re-uses the tunable block shape with bilinear ``w . x`` coefficients.  Slots
are listed in application order (first slot acts on the state first).

Per-layer weight layout: all bilinear blocks in slot order, then all scalar
angles in slot order.  Multi-layer weight vectors concatenate the per-layer
segments.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb
from typing import Sequence

import numpy as np

from . import clamaps
from .clamaps import (
    AlphaEntry,
    AlphaSpec,
    Bilinear,
    CLAMap,
    Constant,
    FixedValue,
    PureData,
    alpha_from_json,
    alpha_to_json,
    generator_from_json,
    generator_to_json,
    resolve_terms,
)
from .core import (
    DenseHermitian,
    Generator,
    PAULI_MATRICES,
    PauliString,
    StateVector,
    apply_rotation,
    generators_equal,
)
from .errors import ShapeError, ValidationError

PDR = "pdr"
ACLS = "acls"
CUSTOM = "custom"


@dataclass(frozen=True)
class GateSlot:
    """One parametrised gate: a generator, its coefficient spec, and its
    application position within the layer.  ``alpha`` is ``None`` inside the
    raw block builders and is bound by the layer builder."""

    generator: Generator
    alpha: AlphaSpec | None
    position: int


def k_se(n: int) -> int:
    """Generator count of the rotation-plus-entangler block: 3(n + C(n,2))."""
    return 3 * (n + comb(n, 2))


def rotation_block(n: int) -> list[GateSlot]:
    """Per-qubit X, Y, Z rotation slots (3n), qubit-major, alphas unbound."""
    if n < 1:
        raise ValidationError("need at least one qubit")
    slots = []
    for qubit in range(1, n + 1):
        for axis in ("X", "Y", "Z"):
            slots.append(
                GateSlot(PauliString.single(n, qubit, axis), None, len(slots))
            )
    return slots


def entangler_block(n: int) -> list[GateSlot]:
    """Ising XX, YY, ZZ slots for each qubit pair (i, j), i < j, pairs in
    ascending lexicographic order (3 * C(n,2) slots), alphas unbound."""
    if n < 2:
        raise ValidationError("entanglers need at least two qubits")
    slots = []
    for pair in itertools.combinations(range(1, n + 1), 2):
        for axis in ("X", "Y", "Z"):
            slots.append(GateSlot(PauliString.two_qubit(n, pair, axis), None, len(slots)))
    return slots


def data_upload_block(n: int) -> list[GateSlot]:
    """One X-rotation data encoder per qubit; qubit i reads input i-1."""
    if n < 1:
        raise ValidationError("need at least one qubit")
    return [
        GateSlot(PauliString.single(n, qubit, "X"), PureData(qubit - 1), qubit - 1)
        for qubit in range(1, n + 1)
    ]


def _tunable_generators(n: int) -> list[Generator]:
    gens = [slot.generator for slot in rotation_block(n)]
    if n >= 2:
        gens.extend(slot.generator for slot in entangler_block(n))
    return gens


def build_layer(kind: str, n: int, d_inp: int, layer_index: int = 0) -> list[GateSlot]:
    """Ordered slot list of one layer (encoder first, then the tunable block).

    Slot content is identical across layers; coefficient indices are local
    to the layer, and the model maps them into the layer-major global
    weight vector.
    """
    if layer_index < 0:
        raise ValidationError("layer_index must be >= 0")
    gens = _tunable_generators(n)
    slots: list[GateSlot] = []
    if kind == PDR:
        if d_inp != n:
            raise ValidationError(
                f"pure data re-uploading requires d_inp == n, got d_inp={d_inp}, n={n}"
            )
        slots.extend(data_upload_block(n))
    elif kind == ACLS:
        if d_inp < 1:
            raise ValidationError("d_inp must be >= 1")
        slots.extend(
            GateSlot(g, Bilinear(j), len(slots)) for j, g in enumerate(gens)
        )
    else:
        raise ValidationError(f"unknown layer kind {kind!r}")
    theta = 0
    for g in gens:
        slots.append(GateSlot(g, Constant(theta), len(slots)))
        theta += 1
    return [GateSlot(s.generator, s.alpha, i) for i, s in enumerate(slots)]


@dataclass(frozen=True)
class CountReport:
    kind: str
    n_qubits: int
    d_inp: int
    n_layers: int
    k_se: int
    gates_per_layer: int
    weights_per_layer: int
    total_gates: int
    total_weights: int
    readout_weights: int


def count_report(kind: str, n: int, d_inp: int, n_layers: int) -> CountReport:
    """Closed-form gate and weight counts for a model family."""
    kse = k_se(n)
    if kind == PDR:
        if d_inp != n:
            raise ValidationError("pure data re-uploading requires d_inp == n")
        gates = kse + n
        weights = kse
    elif kind == ACLS:
        gates = 2 * kse
        weights = (d_inp + 1) * kse
    else:
        raise ValidationError(f"unknown model kind {kind!r}")
    if n_layers < 0:
        raise ValidationError("n_layers must be >= 0")
    return CountReport(
        kind=kind,
        n_qubits=n,
        d_inp=d_inp,
        n_layers=n_layers,
        k_se=kse,
        gates_per_layer=gates,
        weights_per_layer=weights,
        total_gates=gates * n_layers,
        total_weights=weights * n_layers,
        readout_weights=n,
    )


# ---------------------------------------------------------------------------
# full model specification
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class AnsatzSpec:
    """Layered circuit description.

    ``layers`` holds the ordered slot list of every layer.  For the ``pdr``
    and ``acls`` kinds the layers come from :func:`build_layer` and the slot
    counts must match the closed-form count report; ``custom`` accepts any
    hand-built layers (used for small diagnostic models).
    """

    n_qubits: int
    d_inp: int
    d_out: int
    n_layers: int
    kind: str
    layers: tuple[tuple[GateSlot, ...], ...]

    def __post_init__(self):
        layers = tuple(tuple(layer) for layer in self.layers)
        object.__setattr__(self, "layers", layers)
        if self.n_qubits < 1:
            raise ValidationError("n_qubits must be >= 1")
        if self.d_out < 1 or self.n_qubits % self.d_out != 0:
            raise ValidationError(
                f"n_qubits={self.n_qubits} must be divisible by d_out={self.d_out}"
            )
        if len(layers) != self.n_layers:
            raise ShapeError(f"{len(layers)} layers listed, n_layers={self.n_layers}")
        for layer in layers:
            if [s.position for s in layer] != list(range(len(layer))):
                raise ValidationError("slot positions must be contiguous from 0")
            if any(s.alpha is None for s in layer):
                raise ValidationError("all slots of a finished layer must be bound")
        if self.kind in (PDR, ACLS):
            report = count_report(self.kind, self.n_qubits, self.d_inp, self.n_layers)
            for layer in layers:
                if len(layer) != report.gates_per_layer:
                    raise ShapeError(
                        f"{self.kind} layer has {len(layer)} slots, "
                        f"expected {report.gates_per_layer}"
                    )
        elif self.kind != CUSTOM:
            raise ValidationError(f"unknown ansatz kind {self.kind!r}")
        widths = tuple(
            resolve_terms([s.alpha for s in layer], self.d_inp)[1] for layer in layers
        )
        object.__setattr__(self, "_layer_widths", widths)

    @property
    def layer_weight_widths(self) -> tuple[int, ...]:
        return self._layer_widths

    @property
    def total_circuit_weights(self) -> int:
        return int(sum(self._layer_widths))

    def layer_weight_offset(self, layer: int) -> int:
        return int(sum(self._layer_widths[:layer]))


def build_ansatz(kind: str, n_qubits: int, d_inp: int, d_out: int, n_layers: int) -> AnsatzSpec:
    layers = tuple(
        tuple(build_layer(kind, n_qubits, d_inp, l)) for l in range(n_layers)
    )
    return AnsatzSpec(
        n_qubits=n_qubits,
        d_inp=d_inp,
        d_out=d_out,
        n_layers=n_layers,
        kind=kind,
        layers=layers,
    )


# ---------------------------------------------------------------------------
# slot-list utilities
# ---------------------------------------------------------------------------


def from_slots(slots: Sequence[GateSlot], d_inp: int, reindex: bool = False) -> CLAMap:
    """Coefficient map of a slot list, collapsing repeated generators.

    With ``reindex`` the bilinear and theta ordinals are reassigned in slot
    order (used when analysing a block carved out of a larger layer).
    """
    specs = [slot.alpha for slot in slots]
    if any(spec is None for spec in specs):
        raise ValidationError("cannot build a coefficient map from unbound slots")
    if reindex:
        specs = _reindexed(specs)
    gens: list[Generator] = []
    entries: list[list[AlphaSpec]] = []
    for slot, spec in zip(slots, specs):
        for j, g in enumerate(gens):
            if generators_equal(g, slot.generator):
                entries[j].append(spec)
                break
        else:
            gens.append(slot.generator)
            entries.append([spec])
    return CLAMap(tuple(gens), tuple(tuple(e) for e in entries), d_inp)


def _reindexed(specs: Sequence[AlphaSpec]) -> list[AlphaSpec]:
    out: list[AlphaSpec] = []
    n_bil = 0
    n_theta = 0
    for spec in specs:
        if isinstance(spec, Bilinear):
            out.append(Bilinear(n_bil, spec.input_indices))
            n_bil += 1
        elif isinstance(spec, Constant):
            out.append(Constant(n_theta))
            n_theta += 1
        else:
            out.append(spec)
    return out


def slot_alphas(slots: Sequence[GateSlot], d_inp: int, w, x) -> np.ndarray:
    """Per-slot coefficient values in application order (no collapsing)."""
    specs = [slot.alpha for slot in slots]
    if any(spec is None for spec in specs):
        raise ValidationError("unbound slots have no coefficient values")
    terms, width = resolve_terms(specs, d_inp)
    w = np.asarray(w, dtype=float)
    x = np.asarray(x, dtype=float)
    if w.shape != (width,):
        raise ShapeError(f"weight vector shape {w.shape}, expected ({width},)")
    values = np.zeros(len(terms))
    for i, term in enumerate(terms):
        if term.kind == "const":
            values[i] = w[term.w_start]
        elif term.kind == "data":
            values[i] = x[term.x_indices[0]]
        elif term.kind == "bilinear":
            values[i] = w[term.w_start : term.w_start + term.w_len] @ x[list(term.x_indices)]
        else:
            values[i] = term.value
    return values


def apply_slots(state: StateVector, slots: Sequence[GateSlot], d_inp: int, w, x) -> StateVector:
    """Apply a bound slot list to a single state in application order."""
    values = slot_alphas(slots, d_inp, w, x)
    for slot, angle in zip(slots, values):
        state = apply_rotation(state, slot.generator, float(angle))
    return state


def collapsed_coefficients(
    slots: Sequence[GateSlot], d_inp: int, w, x
) -> tuple[list[Generator], np.ndarray]:
    """Distinct generators of a slot list with their summed coefficients."""
    cla_map = from_slots(slots, d_inp)
    return list(cla_map.generators), clamaps.eval_coefficients(cla_map, w, x)


# ---------------------------------------------------------------------------
# worked two-qubit examples
# ---------------------------------------------------------------------------


def ising_block(n_qubits: int = 2) -> list[GateSlot]:
    """Three-parameter Ising block: ZZ, then YY, then XX applied to the
    state, with thetas (0, 1, 2) owned by (XX, YY, ZZ) respectively."""
    if n_qubits != 2:
        raise ValidationError("the worked Ising block lives on two qubits")
    order = [("Z", 2), ("Y", 1), ("X", 0)]
    return [
        GateSlot(PauliString.two_qubit(2, (1, 2), axis), Constant(theta), pos)
        for pos, (axis, theta) in enumerate(order)
    ]


def apply_ising_block(state: StateVector, w1: float, w2: float, w3: float) -> StateVector:
    """Apply the Ising block with weights (w1, w2, w3) for (XX, YY, ZZ)."""
    return apply_slots(state, ising_block(), d_inp=0, w=np.array([w1, w2, w3]), x=np.zeros(0))


def cnot_generator() -> DenseHermitian:
    """Hermitian generator of the CNOT gate on qubits (1, 2):
    ``exp(-(i/2)(pi/2) * G)`` equals CNOT (control 1, target 2)."""
    eye = PAULI_MATRICES["I"]
    sx = PAULI_MATRICES["X"]
    sz = PAULI_MATRICES["Z"]
    matrix = (
        np.kron(eye, eye) - np.kron(eye, sx) - np.kron(sz, eye) + np.kron(sz, sx)
    )
    return DenseHermitian(matrix=matrix, support=(1, 2))


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def _slot_to_json(slot: GateSlot) -> dict:
    if slot.alpha is None:
        raise ValidationError("cannot serialize unbound slots")
    return {
        "generator": generator_to_json(slot.generator),
        "alpha": alpha_to_json((slot.alpha,)),
        "position": slot.position,
    }


def _slot_from_json(doc: dict) -> GateSlot:
    entry = alpha_from_json(doc["alpha"])
    if len(entry) != 1:
        raise ValidationError("slot coefficients must be single specs")
    return GateSlot(
        generator=generator_from_json(doc["generator"]),
        alpha=entry[0],
        position=int(doc["position"]),
    )


def ansatz_to_json(spec: AnsatzSpec) -> dict:
    return {
        "schema": "ansatz",
        "kind": spec.kind,
        "n_qubits": spec.n_qubits,
        "d_inp": spec.d_inp,
        "d_out": spec.d_out,
        "n_layers": spec.n_layers,
        "layers": [[_slot_to_json(s) for s in layer] for layer in spec.layers],
    }


def ansatz_from_json(doc: dict) -> AnsatzSpec:
    if doc.get("schema") != "ansatz":
        raise ValidationError("document is not an ansatz schema")
    return AnsatzSpec(
        n_qubits=int(doc["n_qubits"]),
        d_inp=int(doc["d_inp"]),
        d_out=int(doc["d_out"]),
        n_layers=int(doc["n_layers"]),
        kind=doc["kind"],
        layers=tuple(
            tuple(_slot_from_json(s) for s in layer) for layer in doc["layers"]
        ),
    )
