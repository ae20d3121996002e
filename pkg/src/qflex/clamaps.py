"""Coefficient maps from (weights, inputs) to gate-generator directions.

A :class:`CLAMap` sends a flat weight vector ``w`` and an input sample ``x``
to one real coefficient per distinct generator of a circuit block.  Its two
Jacobians diagnose the block's geometry: the weight Jacobian measures how
many generator directions the weights can steer (completeness) and the data
Jacobian measures how differently the block acts across inputs (selectivity).
The almost-everywhere rank check over sampled inputs and weights classifies
a block as a fixed transformation, a learnable rigid rotation, a fixed
deformation, or a learnable deformation.

Weight layout convention: every bilinear block occupies a contiguous slice,
blocks ordered by their ordinal, followed by all scalar angle parameters in
ordinal order.  ``d_w_total`` is always the sum of the two regions.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Sequence, Union

import numpy as np

from .config import DEFAULT_TOLERANCES, Tolerances
from .core import DenseHermitian, Generator, PauliString, generators_equal
from .errors import ShapeError, ValidationError

# ---------------------------------------------------------------------------
# coefficient specifications
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Constant:
    """Trainable angle: the coefficient is the theta with this ordinal."""

    theta_index: int


@dataclass(frozen=True)
class PureData:
    """Untrainable encoding: the coefficient is ``x[input_index]``."""

    input_index: int


@dataclass(frozen=True)
class Bilinear:
    """Trainable data coupling ``w_j . x`` with its own weight block.

    ``input_indices`` restricts the coupling to a subset of the input
    components (``None`` couples the full input vector); it is what lets a
    single scalar weight multiply a single input component.
    """

    weight_vector_index: int
    input_indices: tuple[int, ...] | None = None


@dataclass(frozen=True)
class FixedValue:
    """Non-parametric gate: the coefficient is a constant number."""

    value: float


AlphaSpec = Union[Constant, PureData, Bilinear, FixedValue]
AlphaEntry = tuple[AlphaSpec, ...]


@dataclass(frozen=True)
class _Term:
    kind: str  # "const" | "data" | "bilinear" | "fixed"
    w_start: int = -1
    w_len: int = 0
    x_indices: tuple[int, ...] = ()
    value: float = 0.0


def resolve_terms(
    specs: Sequence[AlphaSpec], d_inp: int
) -> tuple[list[_Term], int]:
    """Resolve coefficient specs into absolute weight offsets.

    Bilinear ordinals and theta ordinals must each be contiguous from zero;
    returns the resolved terms in input order plus the total weight width.
    """
    full = tuple(range(d_inp))
    bil: dict[int, Bilinear] = {}
    thetas: set[int] = set()
    for spec in specs:
        if isinstance(spec, Bilinear):
            if spec.weight_vector_index in bil:
                raise ValidationError(
                    f"duplicate bilinear ordinal {spec.weight_vector_index}"
                )
            idx = spec.input_indices if spec.input_indices is not None else full
            if not idx:
                raise ValidationError("bilinear coupling needs at least one input")
            if len(set(idx)) != len(idx) or any(not 0 <= i < d_inp for i in idx):
                raise ValidationError(f"bad bilinear input indices {idx}")
            bil[spec.weight_vector_index] = spec
        elif isinstance(spec, Constant):
            if spec.theta_index in thetas:
                raise ValidationError(f"duplicate theta ordinal {spec.theta_index}")
            thetas.add(spec.theta_index)
        elif isinstance(spec, PureData):
            if not 0 <= spec.input_index < d_inp:
                raise ValidationError(
                    f"input index {spec.input_index} out of range for d_inp={d_inp}"
                )
    if bil and sorted(bil) != list(range(len(bil))):
        raise ValidationError("bilinear ordinals must be contiguous from 0")
    if thetas and sorted(thetas) != list(range(len(thetas))):
        raise ValidationError("theta ordinals must be contiguous from 0")

    offsets: dict[int, int] = {}
    running = 0
    for ordinal in range(len(bil)):
        offsets[ordinal] = running
        spec = bil[ordinal]
        running += len(spec.input_indices) if spec.input_indices is not None else d_inp
    theta_base = running
    d_w_total = running + len(thetas)

    terms: list[_Term] = []
    for spec in specs:
        if isinstance(spec, Constant):
            terms.append(_Term("const", w_start=theta_base + spec.theta_index, w_len=1))
        elif isinstance(spec, PureData):
            terms.append(_Term("data", x_indices=(spec.input_index,)))
        elif isinstance(spec, Bilinear):
            idx = spec.input_indices if spec.input_indices is not None else full
            terms.append(
                _Term(
                    "bilinear",
                    w_start=offsets[spec.weight_vector_index],
                    w_len=len(idx),
                    x_indices=tuple(idx),
                )
            )
        elif isinstance(spec, FixedValue):
            terms.append(_Term("fixed", value=float(spec.value)))
        else:
            raise ValidationError(f"unknown coefficient spec {spec!r}")
    return terms, d_w_total


# ---------------------------------------------------------------------------
# the map itself
# ---------------------------------------------------------------------------


def _entry_tuple(entry) -> AlphaEntry:
    if isinstance(entry, (Constant, PureData, Bilinear, FixedValue)):
        return (entry,)
    entry = tuple(entry)
    if not entry:
        raise ValidationError("empty coefficient entry")
    return entry


@dataclass(frozen=True, eq=False)
class CLAMap:
    """Bilinear coefficient map onto a set of distinct generators.

    ``alphas[j]`` is a tuple of specs whose values add up to the coefficient
    of ``generators[j]``; repeated gates on the same generator collapse into
    such sums.
    """

    generators: tuple[Generator, ...]
    alphas: tuple[AlphaEntry, ...]
    d_inp: int
    d_w_total: int = -1

    def __post_init__(self):
        generators = tuple(self.generators)
        alphas = tuple(_entry_tuple(e) for e in self.alphas)
        object.__setattr__(self, "generators", generators)
        object.__setattr__(self, "alphas", alphas)
        if len(generators) != len(alphas):
            raise ShapeError(
                f"{len(generators)} generators but {len(alphas)} coefficient entries"
            )
        if not generators:
            raise ValidationError("a coefficient map needs at least one generator")
        if self.d_inp < 0:
            raise ValidationError("d_inp must be non-negative")
        for a in range(len(generators)):
            for b in range(a + 1, len(generators)):
                if generators_equal(generators[a], generators[b]):
                    raise ValidationError(
                        f"generators {a} and {b} are the same operator direction"
                    )
        n = self.n_qubits
        if n is not None and len(generators) > 4**n - 1:
            raise ValidationError(
                f"{len(generators)} generators exceed the {4**n - 1} distinct "
                f"directions available on {n} qubits"
            )
        flat = [spec for entry in alphas for spec in entry]
        terms, width = resolve_terms(flat, self.d_inp)
        if self.d_w_total == -1:
            object.__setattr__(self, "d_w_total", width)
        elif self.d_w_total != width:
            raise ShapeError(
                f"declared d_w_total={self.d_w_total} but layout resolves to {width}"
            )
        grouped: list[tuple[_Term, ...]] = []
        pos = 0
        for entry in alphas:
            grouped.append(tuple(terms[pos : pos + len(entry)]))
            pos += len(entry)
        object.__setattr__(self, "_terms", tuple(grouped))

    @property
    def k(self) -> int:
        return len(self.generators)

    @property
    def n_qubits(self) -> int | None:
        n = 0
        for g in self.generators:
            if isinstance(g, PauliString):
                n = max(n, g.n_qubits)
            else:
                n = max(n, max(g.support))
        return n or None

    def _check_w(self, w: np.ndarray) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        if w.shape != (self.d_w_total,):
            raise ShapeError(f"weight vector shape {w.shape}, expected ({self.d_w_total},)")
        return w

    def _check_x(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.d_inp,):
            raise ShapeError(f"input vector shape {x.shape}, expected ({self.d_inp},)")
        return x


def eval_coefficients(cla_map: CLAMap, w, x) -> np.ndarray:
    """Coefficient vector (length k) of the map at weights ``w``, input ``x``."""
    w = cla_map._check_w(w)
    x = cla_map._check_x(x)
    out = np.zeros(cla_map.k)
    for j, entry in enumerate(cla_map._terms):
        acc = 0.0
        for term in entry:
            if term.kind == "const":
                acc += w[term.w_start]
            elif term.kind == "data":
                acc += x[term.x_indices[0]]
            elif term.kind == "bilinear":
                acc += float(
                    w[term.w_start : term.w_start + term.w_len]
                    @ x[list(term.x_indices)]
                )
            else:
                acc += term.value
        out[j] = acc
    return out


def weight_jacobian(cla_map: CLAMap, x) -> np.ndarray:
    """Exact Jacobian of the coefficients with respect to the weights."""
    x = cla_map._check_x(x)
    jac = np.zeros((cla_map.k, cla_map.d_w_total))
    for j, entry in enumerate(cla_map._terms):
        for term in entry:
            if term.kind == "const":
                jac[j, term.w_start] += 1.0
            elif term.kind == "bilinear":
                jac[j, term.w_start : term.w_start + term.w_len] += x[
                    list(term.x_indices)
                ]
    return jac


def data_jacobian(cla_map: CLAMap, w) -> np.ndarray:
    """Exact Jacobian of the coefficients with respect to the input."""
    w = cla_map._check_w(w)
    jac = np.zeros((cla_map.k, cla_map.d_inp))
    for j, entry in enumerate(cla_map._terms):
        for term in entry:
            if term.kind == "data":
                jac[j, term.x_indices[0]] += 1.0
            elif term.kind == "bilinear":
                jac[j, list(term.x_indices)] += w[
                    term.w_start : term.w_start + term.w_len
                ]
    return jac


@dataclass(frozen=True)
class JacobianReport:
    weight_jacobian: np.ndarray
    data_jacobian: np.ndarray
    weight_rank: int
    data_rank: int


def jacobian_report(
    cla_map: CLAMap, w, x, tol: Tolerances = DEFAULT_TOLERANCES
) -> JacobianReport:
    jw = weight_jacobian(cla_map, x)
    jx = data_jacobian(cla_map, w)
    return JacobianReport(
        weight_jacobian=jw,
        data_jacobian=jx,
        weight_rank=numerical_rank(jw, abs_tol=tol.rank_abs_tol),
        data_rank=numerical_rank(jx, abs_tol=tol.rank_abs_tol),
    )


def numerical_rank(matrix, abs_tol: float | None = None) -> int:
    """Rank as the number of singular values above tolerance.

    Default policy: ``max(shape) * eps * sigma_max``; passing ``abs_tol``
    switches to an absolute cutoff for adversarially scaled matrices.
    """
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    if matrix.size == 0:
        return 0
    if not np.all(np.isfinite(matrix)):
        raise ValidationError("matrix has non-finite entries")
    sing = np.linalg.svd(matrix, compute_uv=False)
    if abs_tol is None:
        cutoff = max(matrix.shape) * np.finfo(float).eps * (sing[0] if sing.size else 0.0)
    else:
        cutoff = abs_tol
    return int(np.count_nonzero(sing > cutoff))


# ---------------------------------------------------------------------------
# geometric classification
# ---------------------------------------------------------------------------


class GateGeometry(str, Enum):
    FIXED = "Fixed"
    LEARNABLE_RIGID_ROTATION = "LearnableRigidRotation"
    FIXED_DEFORMATION = "FixedDeformation"
    LEARNABLE_DEFORMATION = "LearnableDeformation"


@dataclass(frozen=True)
class ACLSVerdict:
    complete_fraction: float
    selective_fraction: float
    classification: GateGeometry
    weight_rank_target: int
    data_rank_target: int
    n_samples: int


Sampler = Callable[[np.random.Generator], np.ndarray]


def normal_sampler(dim: int, scale: float = 1.0) -> Sampler:
    def sample(rng: np.random.Generator) -> np.ndarray:
        return scale * rng.standard_normal(dim)

    return sample


def uniform_sampler(dim: int, low: float = -1.0, high: float = 1.0) -> Sampler:
    def sample(rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(low, high, size=dim)

    return sample


def acls_check(
    cla_map: CLAMap,
    x_sampler: Sampler,
    w_sampler: Sampler,
    n_samples: int,
    seed: int,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> ACLSVerdict:
    """Monte-Carlo rank check of the two Jacobians.

    Sample i always draws from ``default_rng([seed, stream, i])``, so the
    verdict is independent of evaluation order and reproducible per seed.
    """
    if n_samples < 1:
        raise ValidationError("n_samples must be >= 1")
    k = cla_map.k
    data_target = min(cla_map.d_inp, k)
    complete_hits = 0
    selective_hits = 0
    for i in range(n_samples):
        x = np.asarray(x_sampler(np.random.default_rng([seed, 0, i])), dtype=float)
        w = np.asarray(w_sampler(np.random.default_rng([seed, 1, i])), dtype=float)
        if numerical_rank(weight_jacobian(cla_map, x), abs_tol=tol.rank_abs_tol) == k:
            complete_hits += 1
        if (
            numerical_rank(data_jacobian(cla_map, w), abs_tol=tol.rank_abs_tol)
            == data_target
        ):
            selective_hits += 1
    complete_fraction = complete_hits / n_samples
    selective_fraction = selective_hits / n_samples
    complete_ok = complete_fraction >= tol.complete_threshold
    selective_ok = selective_fraction >= tol.selective_threshold
    if complete_ok and selective_ok:
        classification = GateGeometry.LEARNABLE_DEFORMATION
    elif complete_ok:
        classification = GateGeometry.LEARNABLE_RIGID_ROTATION
    elif selective_ok:
        classification = GateGeometry.FIXED_DEFORMATION
    else:
        classification = GateGeometry.FIXED
    return ACLSVerdict(
        complete_fraction=complete_fraction,
        selective_fraction=selective_fraction,
        classification=classification,
        weight_rank_target=k,
        data_rank_target=data_target,
        n_samples=n_samples,
    )


def selective_direction_count(cla_map: CLAMap) -> int:
    """Number of generator directions whose coefficient depends on the input.

    When every data-dependent generator is a single-qubit Pauli the count
    cannot exceed three directions per qubit; a violation is reported as a
    warning, not an error.
    """
    count = 0
    single_qubit_only = True
    for g, entry in zip(cla_map.generators, cla_map._terms):
        if any(term.kind in ("data", "bilinear") for term in entry):
            count += 1
            if isinstance(g, PauliString):
                if len(g.support) != 1:
                    single_qubit_only = False
            elif g.n_support != 1:
                single_qubit_only = False
    n = cla_map.n_qubits
    if single_qubit_only and n is not None and count > 3 * n:
        warnings.warn(
            f"{count} selective single-qubit directions exceed the 3n cap ({3 * n})",
            stacklevel=2,
        )
    return count


# ---------------------------------------------------------------------------
# canonical constructions
# ---------------------------------------------------------------------------


def constant_map(generators: Sequence[Generator], d_inp: int = 0) -> CLAMap:
    """Data-independent map: one trainable angle per generator."""
    gens = tuple(generators)
    return CLAMap(gens, tuple(Constant(j) for j in range(len(gens))), d_inp)


def pure_data_map(generators: Sequence[Generator], d_inp: int) -> CLAMap:
    """Untrainable encoding repeating the input over the generators.

    Requires the generator count to be a multiple of ``d_inp``; generator j
    reads input component ``j mod d_inp``.
    """
    gens = tuple(generators)
    if d_inp < 1:
        raise ValidationError("pure-data map needs d_inp >= 1")
    if len(gens) % d_inp != 0:
        raise ValidationError(
            f"{len(gens)} generators cannot repeat an input of dimension {d_inp}"
        )
    return CLAMap(gens, tuple(PureData(j % d_inp) for j in range(len(gens))), d_inp)


def bilinear_map(generators: Sequence[Generator], d_inp: int) -> CLAMap:
    """Fully coupled map: every generator gets its own weight vector dotted
    with the whole input."""
    gens = tuple(generators)
    return CLAMap(gens, tuple(Bilinear(j) for j in range(len(gens))), d_inp)


def diagonal_bilinear_map(generators: Sequence[Generator]) -> CLAMap:
    """One scalar weight per generator multiplying one input component
    (requires as many generators as input components)."""
    gens = tuple(generators)
    return CLAMap(
        gens,
        tuple(Bilinear(j, input_indices=(j,)) for j in range(len(gens))),
        d_inp=len(gens),
    )


# ---------------------------------------------------------------------------
# one-dimensional closed forms
# ---------------------------------------------------------------------------


def closed_form_fidelity_1d(x1: float, x2: float, w: float) -> float:
    """Fidelity of two X-encoded single-qubit states after an input-coupled
    Z rotation with angle ``w * x``."""
    d = 0.5 * (x1 - x2)
    s = 0.5 * (x1 + x2)
    return math.cos(w * d) ** 2 * math.cos(d) ** 2 + math.sin(w * d) ** 2 * math.cos(s) ** 2


def closed_form_derivative_1d(x1: float, x2: float, w: float) -> float:
    """Derivative of :func:`closed_form_fidelity_1d` with respect to ``w``."""
    return (
        -0.5 * (x1 - x2) * math.sin(w * (x1 - x2)) * math.sin(x1) * math.sin(x2)
    )


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def generator_to_json(g: Generator) -> dict:
    if isinstance(g, PauliString):
        return {"pauli": str(g)}
    return {
        "dense": {
            "support": list(g.support),
            "re": g.matrix.real.tolist(),
            "im": g.matrix.imag.tolist(),
        }
    }


def generator_from_json(doc: dict) -> Generator:
    if "pauli" in doc:
        return PauliString.from_str(doc["pauli"])
    if "dense" in doc:
        body = doc["dense"]
        matrix = np.asarray(body["re"], dtype=float) + 1j * np.asarray(
            body["im"], dtype=float
        )
        return DenseHermitian(matrix=matrix, support=tuple(body["support"]))
    raise ValidationError(f"unrecognized generator document: {doc}")


def alpha_to_json(entry: AlphaEntry) -> dict:
    def one(spec: AlphaSpec) -> dict:
        if isinstance(spec, Constant):
            return {"type": "constant", "theta_index": spec.theta_index}
        if isinstance(spec, PureData):
            return {"type": "pure_data", "input_index": spec.input_index}
        if isinstance(spec, Bilinear):
            idx = None if spec.input_indices is None else list(spec.input_indices)
            return {
                "type": "bilinear",
                "weight_vector_index": spec.weight_vector_index,
                "input_indices": idx,
            }
        return {"type": "fixed", "value": spec.value}

    if len(entry) == 1:
        return one(entry[0])
    return {"type": "sum", "terms": [one(s) for s in entry]}


def alpha_from_json(doc: dict) -> AlphaEntry:
    kind = doc.get("type")
    if kind == "sum":
        return tuple(alpha_from_json(t)[0] for t in doc["terms"])
    if kind == "constant":
        return (Constant(int(doc["theta_index"])),)
    if kind == "pure_data":
        return (PureData(int(doc["input_index"])),)
    if kind == "bilinear":
        idx = doc.get("input_indices")
        return (
            Bilinear(
                int(doc["weight_vector_index"]),
                None if idx is None else tuple(int(i) for i in idx),
            ),
        )
    if kind == "fixed":
        return (FixedValue(float(doc["value"])),)
    raise ValidationError(f"unrecognized coefficient document: {doc}")


def cla_map_to_json(cla_map: CLAMap) -> dict:
    return {
        "schema": "cla_map",
        "d_inp": cla_map.d_inp,
        "d_w_total": cla_map.d_w_total,
        "generators": [generator_to_json(g) for g in cla_map.generators],
        "alphas": [alpha_to_json(e) for e in cla_map.alphas],
    }


def cla_map_from_json(doc: dict) -> CLAMap:
    if doc.get("schema") != "cla_map":
        raise ValidationError("document is not a coefficient-map schema")
    return CLAMap(
        generators=tuple(generator_from_json(g) for g in doc["generators"]),
        alphas=tuple(alpha_from_json(a) for a in doc["alphas"]),
        d_inp=int(doc["d_inp"]),
        d_w_total=int(doc.get("d_w_total", -1)),
    )
