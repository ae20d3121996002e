"""Batched circuit evolution and reverse-pass differentiation (internal).

States are stacked as rows of a (batch, 2**n) complex array so each gate is
applied to the whole batch in a handful of vectorized operations.  All gate
angles of a pass are evaluated up front into one (n_gates, batch) matrix,
whose cosines and sines are shared between the forward pass and the adjoint
gradient pass (the inverse rotation just negates the sine row).

The gradient pass walks the gates backwards, undoing each rotation on both
the evolved state and the back-propagated observable image, reading off one
angle derivative per gate along the way.  Exact for statevector simulation;
cost is a small multiple of the forward pass.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ansatz import AnsatzSpec
from .clamaps import resolve_terms
from .core import PauliString, pauli_masks, pauli_phases
from .errors import DivergenceError, ShapeError

# permutation/phase arrays are cached per generator only on systems small
# enough that the cache stays a few megabytes
_CACHE_MAX_QUBITS = 10


@dataclass(frozen=True)
class _Gate:
    is_pauli: bool
    labels: tuple[str, ...] = ()
    eigvals: np.ndarray | None = None
    eigvecs: np.ndarray | None = None
    support: tuple[int, ...] = ()


@dataclass
class ForwardTrace:
    states: np.ndarray
    alphas: np.ndarray  # (n_gates, batch)
    cos: np.ndarray
    isin: np.ndarray  # 1j * sin, same shape


class CompiledCircuit:
    """Flat gate list of an ansatz with global weight-index bindings."""

    def __init__(self, spec: AnsatzSpec):
        self.spec = spec
        self.n_qubits = spec.n_qubits
        self.dim = 2**spec.n_qubits
        self.gates: list[_Gate] = []
        self.layer_bounds: list[int] = [0]
        self._perm_phase_cache: dict[tuple[str, ...], tuple[np.ndarray, np.ndarray]] = {}
        const_rows: list[int] = []
        const_widx: list[int] = []
        data_rows: list[int] = []
        data_xidx: list[int] = []
        fixed_rows: list[int] = []
        fixed_vals: list[float] = []
        bil: dict[tuple[int, ...], tuple[list[int], list[int]]] = {}
        # (row, weight slice) per gate, for the gradient pass
        self.bindings: list[tuple[str, int, int, tuple[int, ...]]] = []
        for layer_idx, layer in enumerate(spec.layers):
            base = spec.layer_weight_offset(layer_idx)
            terms, _ = resolve_terms([s.alpha for s in layer], spec.d_inp)
            for slot, term in zip(layer, terms):
                row = len(self.gates)
                if term.kind == "const":
                    const_rows.append(row)
                    const_widx.append(base + term.w_start)
                    self.bindings.append(("const", base + term.w_start, 0, ()))
                elif term.kind == "data":
                    data_rows.append(row)
                    data_xidx.append(term.x_indices[0])
                    self.bindings.append(("none", 0, 0, ()))
                elif term.kind == "bilinear":
                    rows, starts = bil.setdefault(term.x_indices, ([], []))
                    rows.append(row)
                    starts.append(base + term.w_start)
                    self.bindings.append(
                        ("bilinear", base + term.w_start, base + term.w_start + term.w_len, term.x_indices)
                    )
                else:
                    fixed_rows.append(row)
                    fixed_vals.append(term.value)
                    self.bindings.append(("none", 0, 0, ()))
                g = slot.generator
                if isinstance(g, PauliString):
                    if g.n_qubits != spec.n_qubits:
                        raise ShapeError(
                            f"generator on {g.n_qubits} qubits in a "
                            f"{spec.n_qubits}-qubit circuit"
                        )
                    self.gates.append(_Gate(True, labels=g.labels))
                else:
                    if max(g.support) > spec.n_qubits:
                        raise ShapeError(f"support {g.support} out of range")
                    vals, vecs = np.linalg.eigh(g.matrix)
                    self.gates.append(
                        _Gate(False, eigvals=vals, eigvecs=vecs, support=g.support)
                    )
            self.layer_bounds.append(len(self.gates))
        self._const = (np.asarray(const_rows, dtype=int), np.asarray(const_widx, dtype=int))
        self._data = (np.asarray(data_rows, dtype=int), np.asarray(data_xidx, dtype=int))
        self._fixed = (np.asarray(fixed_rows, dtype=int), np.asarray(fixed_vals))
        self._bil_groups = [
            (np.asarray(rows, dtype=int), np.asarray(starts, dtype=int), idx)
            for idx, (rows, starts) in bil.items()
        ]

    # -- helpers --------------------------------------------------------------

    def _perm_phase(self, gate: _Gate) -> tuple[np.ndarray, np.ndarray]:
        if self.n_qubits <= _CACHE_MAX_QUBITS:
            hit = self._perm_phase_cache.get(gate.labels)
            if hit is None:
                hit = pauli_phases(self.n_qubits, gate.labels)
                self._perm_phase_cache[gate.labels] = hit
            return hit
        return pauli_phases(self.n_qubits, gate.labels)

    def alpha_matrix(self, w: np.ndarray, x_batch: np.ndarray) -> np.ndarray:
        """All gate angles of the pass, one row per gate."""
        batch = x_batch.shape[0]
        alphas = np.empty((len(self.gates), batch))
        rows, widx = self._const
        if rows.size:
            alphas[rows] = w[widx][:, None]
        rows, xidx = self._data
        if rows.size:
            alphas[rows] = x_batch[:, xidx].T
        for rows, starts, idx in self._bil_groups:
            width = len(idx)
            w_stack = w[starts[:, None] + np.arange(width)[None, :]]
            alphas[rows] = w_stack @ x_batch[:, list(idx)].T
        rows, vals = self._fixed
        if rows.size:
            alphas[rows] = vals[:, None]
        return alphas

    def _rotate(
        self, states: np.ndarray, gate: _Gate, cos_row: np.ndarray, isin_row: np.ndarray, angles: np.ndarray
    ) -> np.ndarray:
        if gate.is_pauli:
            perm, phase = self._perm_phase(gate)
            flipped = states[:, perm]
            flipped *= phase
            flipped *= isin_row[:, None]
            flipped += cos_row[:, None] * states
            return flipped
        return self._dense_rotate(states, gate, angles)

    def _dense_rotate(self, states: np.ndarray, gate: _Gate, angles: np.ndarray) -> np.ndarray:
        n = self.n_qubits
        m = len(gate.support)
        dim_local = 2**m
        batch = states.shape[0]
        tensor = states.reshape((batch,) + (2,) * n)
        axes = [1 + q - 1 for q in gate.support]
        dest = list(range(1 + n - m, 1 + n))
        tensor = np.moveaxis(tensor, axes, dest)
        shuffled = tensor.shape
        tensor = tensor.reshape(batch, -1, dim_local)
        phases = np.exp(0.5j * angles[:, None] * gate.eigvals[None, :])
        tensor = tensor @ gate.eigvecs.conj()
        tensor = tensor * phases[:, None, :]
        tensor = tensor @ gate.eigvecs.T
        tensor = np.moveaxis(tensor.reshape(shuffled), dest, axes)
        return tensor.reshape(batch, self.dim)

    def _generator_apply(self, states: np.ndarray, gate: _Gate) -> np.ndarray:
        if gate.is_pauli:
            perm, phase = self._perm_phase(gate)
            return phase * states[:, perm]
        scaled = (gate.eigvecs * gate.eigvals) @ gate.eigvecs.conj().T
        n = self.n_qubits
        m = len(gate.support)
        batch = states.shape[0]
        tensor = states.reshape((batch,) + (2,) * n)
        axes = [1 + q - 1 for q in gate.support]
        dest = list(range(1 + n - m, 1 + n))
        tensor = np.moveaxis(tensor, axes, dest)
        shuffled = tensor.shape
        tensor = tensor.reshape(batch, -1, 2**m) @ scaled.T
        tensor = np.moveaxis(tensor.reshape(shuffled), dest, axes)
        return tensor.reshape(batch, self.dim)

    # -- passes ---------------------------------------------------------------

    def forward(
        self,
        w: np.ndarray,
        x_batch: np.ndarray,
        psi0: np.ndarray,
        keep_trace: bool = False,
        check_norm: bool = False,
        norm_atol: float = 1e-11,
    ) -> ForwardTrace:
        """Evolve ``psi0`` through all layers for every row of ``x_batch``."""
        batch = x_batch.shape[0]
        states = np.broadcast_to(psi0, (batch, self.dim)).astype(complex)
        alphas = self.alpha_matrix(w, x_batch)
        half = 0.5 * alphas
        cos = np.cos(half)
        isin = 1j * np.sin(half)
        boundaries = set(self.layer_bounds[1:]) if check_norm else ()
        for idx, gate in enumerate(self.gates):
            states = self._rotate(states, gate, cos[idx], isin[idx], alphas[idx])
            if idx + 1 in boundaries:
                norms = np.linalg.norm(states, axis=1)
                if np.any(np.abs(norms - 1.0) > norm_atol):
                    raise DivergenceError(
                        f"state norm drifted to {norms.max()!r} at gate {idx}"
                    )
        if keep_trace:
            return ForwardTrace(states=states, alphas=alphas, cos=cos, isin=isin)
        return ForwardTrace(states=states, alphas=alphas[:0], cos=cos[:0], isin=isin[:0])

    def z_signs(self) -> np.ndarray:
        """(n_qubits, dim) matrix of +/-1 readout signs per qubit."""
        idx = np.arange(self.dim)
        bits = (idx[None, :] >> (self.n_qubits - 1 - np.arange(self.n_qubits))[:, None]) & 1
        return 1.0 - 2.0 * bits

    def backward(
        self,
        trace: ForwardTrace,
        w: np.ndarray,
        x_batch: np.ndarray,
        cotangent: np.ndarray,
    ) -> np.ndarray:
        """Gradient of ``sum_s <psi_s| diag(cotangent_s) |psi_s>`` with
        respect to the circuit weights (``cotangent`` already carries the
        loss scale)."""
        grad = np.zeros(w.shape)
        lam = cotangent * trace.states
        kst = trace.states
        for idx in range(len(self.gates) - 1, -1, -1):
            gate = self.gates[idx]
            kind, lo, hi, x_indices = self.bindings[idx]
            if kind != "none":
                g_kst = self._generator_apply(kst, gate)
                # d/da of <lam|exp((i/2) a G)|k> + c.c. at the current point
                per_sample = -np.einsum("sb,sb->s", np.conj(lam), g_kst).imag
                if kind == "const":
                    grad[lo] += float(per_sample.sum())
                else:
                    grad[lo:hi] += per_sample @ x_batch[:, list(x_indices)]
            neg_isin = -trace.isin[idx]
            kst = self._rotate(kst, gate, trace.cos[idx], neg_isin, -trace.alphas[idx])
            lam = self._rotate(lam, gate, trace.cos[idx], neg_isin, -trace.alphas[idx])
        return grad
