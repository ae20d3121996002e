"""Dense statevector simulation for n-qubit pure states.

States are complex amplitude vectors of length 2**n in the computational
basis with qubit 1 as the most significant bit.  Parametrised gates follow
the convention ``exp((i/2) * angle * G)`` for a Hermitian generator ``G``.
Pauli-string generators act through bit masks in O(2**n) per gate; dense
generators are exponentiated on their (at most two-qubit) support only.

All operations are pure functions on immutable values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .config import DEFAULT_TOLERANCES, Tolerances
from .errors import ShapeError, ValidationError

PAULI_MATRICES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class StateVector:
    """Normalized pure state; ``amplitudes[b]`` is the amplitude of basis
    state with binary index ``b`` (qubit 1 = most significant bit)."""

    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValidationError("n_qubits must be >= 1")
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (2**self.n_qubits,):
            raise ShapeError(
                f"amplitude array has shape {amps.shape}, expected (2**{self.n_qubits},)"
            )
        norm = float(np.linalg.norm(amps))
        if abs(norm - 1.0) > DEFAULT_TOLERANCES.state_norm_atol:
            raise ValidationError(f"state norm {norm!r} deviates from 1")
        amps = amps.copy()
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    @classmethod
    def from_amplitudes(cls, amplitudes, normalize: bool = False) -> "StateVector":
        amps = np.asarray(amplitudes, dtype=complex)
        n = int(round(math.log2(amps.size)))
        if 2**n != amps.size:
            raise ShapeError(f"amplitude length {amps.size} is not a power of two")
        if normalize:
            norm = np.linalg.norm(amps)
            if norm == 0:
                raise ValidationError("cannot normalize the zero vector")
            amps = amps / norm
        return cls(n, amps)

    @classmethod
    def basis_state(cls, n_qubits: int, index: int = 0) -> "StateVector":
        amps = np.zeros(2**n_qubits, dtype=complex)
        amps[index] = 1.0
        return cls(n_qubits, amps)


@dataclass(frozen=True)
class PauliString:
    """Tensor product of single-qubit Paulis, e.g. ``("X", "I", "Z")``.

    The all-identity string is excluded: it generates only a global phase
    and never appears as a gate generator or observable here.
    """

    labels: tuple[str, ...]

    def __post_init__(self):
        labels = tuple(self.labels)
        object.__setattr__(self, "labels", labels)
        if not labels:
            raise ValidationError("empty Pauli string")
        bad = [lab for lab in labels if lab not in PAULI_MATRICES]
        if bad:
            raise ValidationError(f"invalid Pauli labels: {bad}")
        if all(lab == "I" for lab in labels):
            raise ValidationError("the identity string is not a valid generator")

    @classmethod
    def from_str(cls, text: str) -> "PauliString":
        return cls(tuple(text.strip().upper()))

    @classmethod
    def single(cls, n_qubits: int, qubit: int, axis: str) -> "PauliString":
        """Single-qubit Pauli ``axis`` on ``qubit`` (1-based) padded with I."""
        labels = ["I"] * n_qubits
        labels[qubit - 1] = axis.upper()
        return cls(tuple(labels))

    @classmethod
    def two_qubit(cls, n_qubits: int, pair: tuple[int, int], axis: str) -> "PauliString":
        """Ising-type string ``axis x axis`` on the (1-based) qubit pair."""
        i, j = pair
        labels = ["I"] * n_qubits
        labels[i - 1] = axis.upper()
        labels[j - 1] = axis.upper()
        return cls(tuple(labels))

    @property
    def n_qubits(self) -> int:
        return len(self.labels)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(i + 1 for i, lab in enumerate(self.labels) if lab != "I")

    def __str__(self) -> str:
        return "".join(self.labels)


@dataclass(frozen=True, eq=False)
class DenseHermitian:
    """Explicit Hermitian matrix on an ordered, ascending qubit support.

    Support is limited to one or two qubits; larger dense generators are
    out of scope for this simulator.
    """

    matrix: np.ndarray
    support: tuple[int, ...]
    _tol: Tolerances = field(default=DEFAULT_TOLERANCES, repr=False)

    def __post_init__(self):
        support = tuple(int(q) for q in self.support)
        object.__setattr__(self, "support", support)
        if not 1 <= len(support) <= 2:
            raise ValidationError("dense generators support one or two qubits only")
        if any(q < 1 for q in support) or list(support) != sorted(set(support)):
            raise ValidationError(f"support must be ascending positive qubit indices, got {support}")
        mat = np.asarray(self.matrix, dtype=complex)
        dim = 2 ** len(support)
        if mat.shape != (dim, dim):
            raise ShapeError(f"matrix shape {mat.shape} does not match support {support}")
        if not np.allclose(mat, mat.conj().T, atol=self._tol.hermitian_atol, rtol=0):
            raise ValidationError("dense generator is not Hermitian")
        mat = mat.copy()
        mat.flags.writeable = False
        object.__setattr__(self, "matrix", mat)

    @property
    def n_support(self) -> int:
        return len(self.support)


Generator = Union[PauliString, DenseHermitian]


@dataclass(frozen=True, eq=False)
class EigenSystem:
    """Spectral decomposition ``G = V diag(eigenvalues) V^dagger`` with the
    eigenvectors as orthonormal columns of ``eigenvectors``."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def generators_equal(a: Generator, b: Generator) -> bool:
    """Whether two generators are the same operator direction (dense matrices
    compare up to a real scale factor)."""
    if isinstance(a, PauliString) and isinstance(b, PauliString):
        return a.labels == b.labels
    if isinstance(a, DenseHermitian) and isinstance(b, DenseHermitian):
        if a.support != b.support:
            return False
        na = float(np.linalg.norm(a.matrix))
        nb = float(np.linalg.norm(b.matrix))
        if na == 0.0 or nb == 0.0:
            return na == nb
        return bool(
            np.allclose(a.matrix / na, b.matrix / nb, atol=1e-12)
            or np.allclose(a.matrix / na, -b.matrix / nb, atol=1e-12)
        )
    return False


# ---------------------------------------------------------------------------
# Pauli-string bit-mask machinery
# ---------------------------------------------------------------------------


def pauli_masks(labels: tuple[str, ...]) -> tuple[int, int, int]:
    """Bit masks driving the masked action of a Pauli string.

    Returns ``(flip, yz, n_y)``: bits to XOR into basis indices (X and Y
    positions), bits contributing (-1) phases (Y and Z positions), and the
    number of Y factors.  Qubit i maps to bit position n - i.
    """
    n = len(labels)
    flip = 0
    yz = 0
    n_y = 0
    for i, lab in enumerate(labels):
        bit = 1 << (n - 1 - i)
        if lab in ("X", "Y"):
            flip |= bit
        if lab in ("Y", "Z"):
            yz |= bit
        if lab == "Y":
            n_y += 1
    return flip, yz, n_y


def _bit_parity(values: np.ndarray) -> np.ndarray:
    v = values.astype(np.int64, copy=True)
    for shift in (32, 16, 8, 4, 2, 1):
        v ^= v >> shift
    return v & 1


def pauli_phases(n_qubits: int, labels: tuple[str, ...]) -> tuple[np.ndarray, np.ndarray]:
    """Permutation and phase arrays such that ``(P psi)[b] = phase[b] * psi[perm[b]]``."""
    if len(labels) != n_qubits:
        raise ShapeError(f"Pauli string length {len(labels)} != n_qubits {n_qubits}")
    flip, yz, n_y = pauli_masks(labels)
    idx = np.arange(2**n_qubits, dtype=np.int64)
    perm = idx ^ flip
    signs = 1.0 - 2.0 * _bit_parity(perm & yz)
    phase = (1j ** (n_y % 4)) * signs
    return perm, phase.astype(complex)


def pauli_apply(amplitudes: np.ndarray, labels: tuple[str, ...]) -> np.ndarray:
    """Apply a Pauli string to amplitudes laid out on the last axis."""
    n = int(round(math.log2(amplitudes.shape[-1])))
    perm, phase = pauli_phases(n, labels)
    return phase * amplitudes[..., perm]


def pauli_rotation_apply(amplitudes: np.ndarray, labels: tuple[str, ...], angle) -> np.ndarray:
    """Apply ``exp((i/2) angle P)`` to amplitudes on the last axis.

    ``angle`` may be a scalar or an array matching the leading axes, so a
    batch of states can be rotated by per-sample angles in one call.
    """
    n = int(round(math.log2(amplitudes.shape[-1])))
    perm, phase = pauli_phases(n, labels)
    half = 0.5 * np.asarray(angle, dtype=float)
    cos = np.cos(half)[..., None] if half.ndim else math.cos(half)
    sin = np.sin(half)[..., None] if half.ndim else math.sin(half)
    return cos * amplitudes + (1j * sin) * (phase * amplitudes[..., perm])


def apply_local_matrix(
    amplitudes: np.ndarray, matrix: np.ndarray, support: tuple[int, ...], n_qubits: int
) -> np.ndarray:
    """Apply a matrix living on ``support`` to full-space amplitudes.

    Amplitudes may carry leading batch axes; the state axis is the last one.
    """
    m = len(support)
    dim_local = 2**m
    if matrix.shape != (dim_local, dim_local):
        raise ShapeError(f"local matrix shape {matrix.shape} != support size {m}")
    if any(not 1 <= q <= n_qubits for q in support):
        raise ShapeError(f"support {support} out of range for {n_qubits} qubits")
    lead = amplitudes.shape[:-1]
    nb = len(lead)
    tensor = amplitudes.reshape(lead + (2,) * n_qubits)
    axes = [nb + q - 1 for q in support]
    dest = list(range(nb + n_qubits - m, nb + n_qubits))
    tensor = np.moveaxis(tensor, axes, dest)
    shuffled = tensor.shape
    tensor = tensor.reshape(lead + (-1, dim_local))
    tensor = tensor @ matrix.T
    tensor = tensor.reshape(shuffled)
    tensor = np.moveaxis(tensor, dest, axes)
    return tensor.reshape(lead + (2**n_qubits,))


def generator_matrix(g: Generator, n_qubits: int | None = None) -> np.ndarray:
    """Dense matrix of a generator, optionally embedded into ``n_qubits``.

    Intended for diagnostics on small systems; gate application never goes
    through this path.
    """
    if isinstance(g, PauliString):
        if n_qubits is not None and n_qubits != g.n_qubits:
            raise ShapeError(
                f"Pauli string on {g.n_qubits} qubits cannot embed into {n_qubits}"
            )
        mat = np.array([[1.0]], dtype=complex)
        for lab in g.labels:
            mat = np.kron(mat, PAULI_MATRICES[lab])
        return mat
    n = n_qubits if n_qubits is not None else max(g.support)
    if max(g.support) > n:
        raise ShapeError(f"support {g.support} out of range for {n} qubits")
    if len(g.support) == int(round(math.log2(g.matrix.shape[0]))) and n == len(g.support):
        return g.matrix.copy()
    eye = np.eye(2**n, dtype=complex)
    return apply_local_matrix(eye, g.matrix, g.support, n).T


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------


def apply_rotation(
    state: StateVector,
    g: Generator,
    angle: float,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> StateVector:
    """Return ``exp((i/2) angle G) |state>`` as a new state."""
    if not math.isfinite(angle):
        raise ValidationError(f"angle must be finite, got {angle!r}")
    if isinstance(g, PauliString):
        if g.n_qubits != state.n_qubits:
            raise ShapeError(
                f"generator on {g.n_qubits} qubits applied to {state.n_qubits}-qubit state"
            )
        amps = pauli_rotation_apply(state.amplitudes, g.labels, angle)
    else:
        if max(g.support) > state.n_qubits:
            raise ShapeError(
                f"generator support {g.support} out of range for {state.n_qubits} qubits"
            )
        vals, vecs = np.linalg.eigh(g.matrix)
        local = (vecs * np.exp(0.5j * angle * vals)) @ vecs.conj().T
        amps = apply_local_matrix(state.amplitudes, local, g.support, state.n_qubits)
    return StateVector(state.n_qubits, amps)


def fidelity(s1: StateVector, s2: StateVector) -> float:
    """``|<s1|s2>|**2``, clamped into [0, 1]."""
    if s1.n_qubits != s2.n_qubits:
        raise ShapeError(f"qubit counts differ: {s1.n_qubits} vs {s2.n_qubits}")
    overlap = np.vdot(s1.amplitudes, s2.amplitudes)
    return float(min(1.0, max(0.0, abs(overlap) ** 2)))


def fubini_study_distance(s1: StateVector, s2: StateVector) -> float:
    """arccos of the fidelity; the integrated metric distance on the
    pure-state manifold, in [0, pi/2]."""
    return float(math.acos(min(1.0, max(0.0, fidelity(s1, s2)))))


def expectation(
    state: StateVector, obs: PauliString, tol: Tolerances = DEFAULT_TOLERANCES
) -> float:
    """``<state| obs |state>`` for a Pauli-string observable."""
    if obs.n_qubits != state.n_qubits:
        raise ShapeError(
            f"observable on {obs.n_qubits} qubits, state on {state.n_qubits}"
        )
    value = complex(np.vdot(state.amplitudes, pauli_apply(state.amplitudes, obs.labels)))
    if abs(value.imag) > tol.real_expectation_atol:
        raise ValidationError(f"expectation has residual imaginary part {value.imag!r}")
    return float(value.real)


def eigendecompose(
    g: Generator,
    n_qubits: int | None = None,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> EigenSystem:
    """Full spectral decomposition of a generator (dense; small systems)."""
    mat = generator_matrix(g, n_qubits)
    vals, vecs = np.linalg.eigh(mat)
    recon = (vecs * vals) @ vecs.conj().T
    if not np.allclose(recon, mat, atol=tol.eigen_atol, rtol=0):
        raise ValidationError("eigendecomposition failed to reconstruct the generator")
    return EigenSystem(eigenvalues=vals, eigenvectors=vecs)


def fidelity_weight_derivative(
    psi1: StateVector,
    psi2: StateVector,
    g: Generator,
    delta_alpha: float,
    d_delta_alpha_dw: float,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> float:
    """Analytic derivative of ``F(w) = |<psi1| exp((i/2) dalpha(w) G) |psi2>|**2``
    with respect to a weight entering the angle difference.

    ``psi1`` and ``psi2`` are the pre-gate encoded states, ``delta_alpha``
    is the current angle difference between their gate applications and
    ``d_delta_alpha_dw`` its derivative with respect to the weight.  The
    value is assembled as an eigenbasis double sum whose imaginary part
    must cancel; a residual above tolerance signals a bug.
    """
    if psi1.n_qubits != psi2.n_qubits:
        raise ShapeError(f"qubit counts differ: {psi1.n_qubits} vs {psi2.n_qubits}")
    if not (math.isfinite(delta_alpha) and math.isfinite(d_delta_alpha_dw)):
        raise ValidationError("delta_alpha and its derivative must be finite")
    system = eigendecompose(g, n_qubits=psi1.n_qubits, tol=tol)
    c1 = system.eigenvectors.conj().T @ psi1.amplitudes
    c2 = system.eigenvectors.conj().T @ psi2.amplitudes
    t = np.conj(c1) * c2
    # the gate convention exp((i/2) angle G) puts half the eigenvalue gap
    # into every phase factor
    gaps = 0.5 * (system.eigenvalues[:, None] - system.eigenvalues[None, :])
    kernel = gaps * np.exp(1j * delta_alpha * gaps)
    total = 1j * d_delta_alpha_dw * np.einsum("a,ab,b->", t, kernel, np.conj(t))
    if abs(total.imag) > tol.derivative_imag_atol:
        raise ValidationError(
            f"derivative has residual imaginary part {total.imag!r}"
        )
    return float(total.real)
