"""Numerical tolerances and diagnostic thresholds.

All tolerances used by the library live in one frozen record so a single
config file can override them; functions take an optional ``Tolerances``
argument defaulting to :data:`DEFAULT_TOLERANCES`.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass

from .errors import ValidationError


@dataclass(frozen=True)
class Tolerances:
    # state / operator validation
    state_norm_atol: float = 1e-12
    hermitian_atol: float = 1e-12
    # eigendecomposition reconstruction check
    eigen_atol: float = 1e-10
    # expectation values must be real up to this residual
    real_expectation_atol: float = 1e-12
    # eigen-sum fidelity derivative: residual imaginary part budget
    derivative_imag_atol: float = 1e-10
    # numerical rank: singular values below max(shape)*eps*sigma_max are zero;
    # rank_abs_tol, when set, replaces that relative policy
    rank_abs_tol: float | None = None
    # fraction of sampled inputs with full weight-Jacobian rank needed to
    # call a coefficient map complete ("almost every input")
    complete_threshold: float = 0.99
    # fraction of sampled weights with full data-Jacobian rank needed to
    # call it selective ("non-negligible set of weights")
    selective_threshold: float = 0.5
    # validation loss must improve by more than this to reset patience
    val_improvement_atol: float = 1e-12

    @classmethod
    def from_json(cls, path: str) -> "Tolerances":
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: dict) -> "Tolerances":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ValidationError(f"unknown tolerance keys: {sorted(unknown)}")
        return cls(**raw)


DEFAULT_TOLERANCES = Tolerances()
