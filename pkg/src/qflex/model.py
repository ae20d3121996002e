"""Classifier model: reference state, layered circuit, weighted Z readout.

The model output partitions the wires into ``d_out`` contiguous blocks and
sums ``u_i * <Z_i>`` within each block, adding one readout weight per qubit.
Binary tasks use a sigmoid link with cross-entropy; multi-class tasks use a
softmax.  Gradients are exact (adjoint reverse pass through the circuit,
chain rule through the coefficient specs) and are checked against finite
differences in the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .ansatz import AnsatzSpec
from .core import StateVector
from .engine import CompiledCircuit
from .errors import DivergenceError, ShapeError, ValidationError

BINARY = "binary"
MULTICLASS = "multiclass"


def prepare_psi0(n_qubits: int, seed: int) -> StateVector:
    """Reference state with seeded, real, pairwise-distinct amplitudes."""
    rng = np.random.default_rng(seed)
    while True:
        amps = rng.uniform(0.0, 1.0, size=2**n_qubits)
        if np.unique(amps).size == amps.size:
            break
    return StateVector(n_qubits, amps / np.linalg.norm(amps))


@dataclass(frozen=True, eq=False)
class ModelState:
    """Immutable snapshot of a model: spec, circuit weights (layer-major),
    readout weights and the fixed reference state."""

    spec: AnsatzSpec
    circuit_weights: np.ndarray
    readout_weights: np.ndarray
    psi0: StateVector
    psi0_seed: int | None = None

    def __post_init__(self):
        w = np.asarray(self.circuit_weights, dtype=float).copy()
        u = np.asarray(self.readout_weights, dtype=float).copy()
        if w.shape != (self.spec.total_circuit_weights,):
            raise ShapeError(
                f"circuit weights shape {w.shape}, expected "
                f"({self.spec.total_circuit_weights},)"
            )
        if u.shape != (self.spec.n_qubits,):
            raise ShapeError(
                f"readout weights shape {u.shape}, expected ({self.spec.n_qubits},)"
            )
        if self.psi0.n_qubits != self.spec.n_qubits:
            raise ShapeError("reference state qubit count does not match the spec")
        w.flags.writeable = False
        u.flags.writeable = False
        object.__setattr__(self, "circuit_weights", w)
        object.__setattr__(self, "readout_weights", u)

    @property
    def n_trainable(self) -> int:
        return self.circuit_weights.size + self.readout_weights.size

    def with_weights(self, circuit_weights, readout_weights) -> "ModelState":
        return ModelState(
            spec=self.spec,
            circuit_weights=circuit_weights,
            readout_weights=readout_weights,
            psi0=self.psi0,
            psi0_seed=self.psi0_seed,
        )


@lru_cache(maxsize=32)
def compile_circuit(spec: AnsatzSpec) -> CompiledCircuit:
    return CompiledCircuit(spec)


def init_weights(spec: AnsatzSpec, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Random initialization: angles uniform in (-pi, pi), bilinear rows
    normal with scale 1/sqrt(d_inp), readout uniform in (-1, 1)."""
    circuit = compile_circuit(spec)
    w = np.zeros(spec.total_circuit_weights)
    scale = 1.0 / math.sqrt(max(spec.d_inp, 1))
    for kind, lo, hi, _ in circuit.bindings:
        if kind == "const":
            w[lo] = rng.uniform(-math.pi, math.pi)
        elif kind == "bilinear":
            w[lo:hi] = rng.normal(0.0, scale, size=hi - lo)
    u = rng.uniform(-1.0, 1.0, size=spec.n_qubits)
    return w, u


def new_model(spec: AnsatzSpec, seed: int, psi0_seed: int) -> ModelState:
    w, u = init_weights(spec, np.random.default_rng(seed))
    return ModelState(
        spec=spec,
        circuit_weights=w,
        readout_weights=u,
        psi0=prepare_psi0(spec.n_qubits, psi0_seed),
        psi0_seed=psi0_seed,
    )


# ---------------------------------------------------------------------------
# forward pass
# ---------------------------------------------------------------------------


def _check_features(spec: AnsatzSpec, features: np.ndarray) -> np.ndarray:
    features = np.asarray(features, dtype=float)
    if features.ndim != 2 or features.shape[1] != spec.d_inp:
        raise ShapeError(
            f"feature array shape {features.shape}, expected (batch, {spec.d_inp})"
        )
    return features


def _readout(circuit: CompiledCircuit, u: np.ndarray, states: np.ndarray, d_out: int):
    probs = np.abs(states) ** 2
    exps = probs @ circuit.z_signs().T
    n = u.size
    block = n // d_out
    outputs = np.einsum(
        "sjm,jm->sj", exps.reshape(-1, d_out, block), u.reshape(d_out, block)
    )
    return outputs, exps


def forward_batch(model: ModelState, features, check_norm: bool = False) -> np.ndarray:
    """Model outputs, one row per sample, ``d_out`` columns."""
    features = _check_features(model.spec, features)
    circuit = compile_circuit(model.spec)
    trace = circuit.forward(
        model.circuit_weights, features, model.psi0.amplitudes, check_norm=check_norm
    )
    outputs, _ = _readout(circuit, model.readout_weights, trace.states, model.spec.d_out)
    return outputs


def forward(model: ModelState, x, check_norm: bool = False) -> np.ndarray:
    """Model output for a single sample (length ``d_out``)."""
    x = np.asarray(x, dtype=float)
    if x.shape != (model.spec.d_inp,):
        raise ShapeError(f"sample shape {x.shape}, expected ({model.spec.d_inp},)")
    return forward_batch(model, x[None, :], check_norm=check_norm)[0]


# ---------------------------------------------------------------------------
# losses
# ---------------------------------------------------------------------------


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=float)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    ez = np.exp(shifted)
    return ez / ez.sum(axis=1, keepdims=True)


def task_for(spec: AnsatzSpec) -> str:
    return BINARY if spec.d_out == 1 else MULTICLASS


def _check_labels(labels: np.ndarray, n_classes: int) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.ndim != 1:
        raise ShapeError("labels must be one-dimensional")
    if not np.issubdtype(labels.dtype, np.integer):
        as_int = labels.astype(int)
        if not np.array_equal(as_int, labels):
            raise ValidationError("labels must be integers")
        labels = as_int
    if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
        raise ValidationError(
            f"labels must lie in [0, {n_classes}), got range "
            f"[{labels.min()}, {labels.max()}]"
        )
    return labels


def loss(outputs, labels, task: str) -> float:
    """Mean cross-entropy of a batch of model outputs."""
    value, _ = loss_with_grad(np.asarray(outputs, dtype=float), labels, task)
    return value


def loss_with_grad(outputs: np.ndarray, labels, task: str) -> tuple[float, np.ndarray]:
    """Batch-mean loss and its per-sample gradient (already divided by the
    batch size)."""
    outputs = np.asarray(outputs, dtype=float)
    if outputs.ndim == 1:
        outputs = outputs[:, None]
    batch = outputs.shape[0]
    if batch == 0:
        raise ValidationError("empty batch")
    if task == BINARY:
        if outputs.shape[1] != 1:
            raise ShapeError("binary task expects a single output column")
        labels = _check_labels(labels, 2).astype(float)
        f = outputs[:, 0]
        # stable binary cross-entropy on the sigmoid link
        per = np.maximum(f, 0.0) - f * labels + np.log1p(np.exp(-np.abs(f)))
        grad = ((_sigmoid(f) - labels) / batch)[:, None]
    elif task == MULTICLASS:
        n_classes = outputs.shape[1]
        if n_classes < 2:
            raise ShapeError("multi-class task expects at least two output columns")
        labels = _check_labels(labels, n_classes)
        shifted = outputs - outputs.max(axis=1, keepdims=True)
        lse = np.log(np.exp(shifted).sum(axis=1)) + outputs.max(axis=1)
        per = lse - outputs[np.arange(batch), labels]
        grad = softmax(outputs)
        grad[np.arange(batch), labels] -= 1.0
        grad /= batch
    else:
        raise ValidationError(f"unknown task {task!r}")
    if labels.size != batch:
        raise ShapeError(f"{labels.size} labels for a batch of {batch}")
    return float(per.mean()), grad


# ---------------------------------------------------------------------------
# gradients
# ---------------------------------------------------------------------------


def loss_and_gradient(
    model: ModelState, features, labels, task: str | None = None
) -> tuple[float, np.ndarray, np.ndarray]:
    """Batch loss plus exact gradients for circuit and readout weights."""
    features = _check_features(model.spec, features)
    if features.shape[0] == 0:
        raise ValidationError("empty batch")
    task = task or task_for(model.spec)
    circuit = compile_circuit(model.spec)
    d_out = model.spec.d_out
    n = model.spec.n_qubits
    trace = circuit.forward(
        model.circuit_weights, features, model.psi0.amplitudes, keep_trace=True
    )
    outputs, exps = _readout(circuit, model.readout_weights, trace.states, d_out)
    value, dldf = loss_with_grad(outputs, labels, task)
    if not math.isfinite(value):
        raise DivergenceError(f"non-finite loss {value!r}")
    per_qubit = np.repeat(dldf, n // d_out, axis=1)
    grad_u = (per_qubit * exps).sum(axis=0)
    cotangent = (per_qubit * model.readout_weights[None, :]) @ circuit.z_signs()
    grad_w = circuit.backward(trace, model.circuit_weights, features, cotangent)
    return value, grad_w, grad_u


def gradient(model: ModelState, features, labels, task: str | None = None) -> np.ndarray:
    """Gradient over all trainable weights, circuit weights first, then the
    readout vector."""
    _, grad_w, grad_u = loss_and_gradient(model, features, labels, task)
    return np.concatenate([grad_w, grad_u])


def predict_scores(model: ModelState, features, batch_size: int = 512) -> np.ndarray:
    """Class scores for ranking metrics: sigmoid probability (binary) or
    softmax probabilities (multi-class), evaluated in chunks."""
    features = _check_features(model.spec, features)
    chunks = []
    for start in range(0, features.shape[0], batch_size):
        outputs = forward_batch(model, features[start : start + batch_size])
        if model.spec.d_out == 1:
            chunks.append(_sigmoid(outputs[:, 0]))
        else:
            chunks.append(softmax(outputs))
    return np.concatenate(chunks, axis=0)
