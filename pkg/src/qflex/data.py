"""Synthetic concentric-hypersphere benchmark data, feature scaling, and
CSV ingestion for external labelled tabular datasets.

The CSV format is a header ``f0,...,f{d-1},label`` followed by one sample
per row; floats are written with full round-trip precision and LF endings,
so identical configurations export byte-identical files.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, replace

import numpy as np

from .errors import DataFormatError, ValidationError

# two concentric-shell scenarios: mean radii one and three standard
# deviations apart
SCENARIOS = {
    "sphere-1sigma": {"r_mean_a": 0.73, "r_mean_b": 0.78, "sigma_a": 0.05, "sigma_b": 0.05},
    "sphere-3sigma": {"r_mean_a": 0.72, "r_mean_b": 0.78, "sigma_a": 0.02, "sigma_b": 0.02},
}
DEFAULT_SPLIT_SIZES = {"train": 30_000, "val": 15_000, "test": 100_000}


@dataclass(frozen=True)
class HypersphereConfig:
    d_ambient: int = 6
    r_mean_a: float = 0.73
    r_mean_b: float = 0.78
    sigma_a: float = 0.05
    sigma_b: float = 0.05
    n_train: int = 30_000
    n_val: int = 15_000
    n_test: int = 100_000
    seed: int = 0

    def __post_init__(self):
        if self.d_ambient < 1:
            raise ValidationError("d_ambient must be >= 1")
        for name in ("r_mean_a", "r_mean_b", "sigma_a", "sigma_b"):
            if getattr(self, name) <= 0:
                raise ValidationError(f"{name} must be positive")
        for name in ("n_train", "n_val", "n_test"):
            count = getattr(self, name)
            if count < 2 or count % 2 != 0:
                raise ValidationError(
                    f"{name} must be a positive even count (equal class shares), got {count}"
                )

    @classmethod
    def for_scenario(cls, scenario: str, **overrides) -> "HypersphereConfig":
        if scenario not in SCENARIOS:
            raise ValidationError(
                f"unknown scenario {scenario!r}; pick one of {sorted(SCENARIOS)}"
            )
        return cls(**{**SCENARIOS[scenario], **overrides})


@dataclass(frozen=True, eq=False)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    split: str = ""

    def __post_init__(self):
        features = np.asarray(self.features, dtype=float)
        labels = np.asarray(self.labels, dtype=int)
        if features.ndim != 2 or labels.ndim != 1 or features.shape[0] != labels.shape[0]:
            raise ValidationError(
                f"inconsistent dataset shapes {features.shape} / {labels.shape}"
            )
        if not np.all(np.isfinite(features)):
            raise ValidationError("dataset has non-finite feature entries")
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def d_inp(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int:
        return int(self.labels.max()) + 1 if self.labels.size else 0

    def class_histogram(self) -> dict[int, int]:
        values, counts = np.unique(self.labels, return_counts=True)
        return {int(v): int(c) for v, c in zip(values, counts)}


def _sample_class(
    rng: np.random.Generator, n: int, d: int, r_mean: float, sigma: float
) -> np.ndarray:
    """Uniform directions (normalized Gaussians) scaled by normal radii;
    zero-norm directions and non-positive radii are redrawn."""
    directions = rng.standard_normal((n, d))
    norms = np.linalg.norm(directions, axis=1)
    while np.any(norms == 0):
        bad = norms == 0
        directions[bad] = rng.standard_normal((int(bad.sum()), d))
        norms = np.linalg.norm(directions, axis=1)
    radii = rng.normal(r_mean, sigma, size=n)
    while np.any(radii <= 0):
        bad = radii <= 0
        radii[bad] = rng.normal(r_mean, sigma, size=int(bad.sum()))
    return directions * (radii / norms)[:, None]


def _gen_split(cfg: HypersphereConfig, n: int, split: str, seed_tag: int) -> Dataset:
    per_class = n // 2
    rng_a = np.random.default_rng([cfg.seed, seed_tag, 0])
    rng_b = np.random.default_rng([cfg.seed, seed_tag, 1])
    feats_a = _sample_class(rng_a, per_class, cfg.d_ambient, cfg.r_mean_a, cfg.sigma_a)
    feats_b = _sample_class(rng_b, per_class, cfg.d_ambient, cfg.r_mean_b, cfg.sigma_b)
    features = np.concatenate([feats_a, feats_b], axis=0)
    labels = np.concatenate([np.zeros(per_class, dtype=int), np.ones(per_class, dtype=int)])
    order = np.random.default_rng([cfg.seed, seed_tag, 2]).permutation(n)
    return Dataset(features[order], labels[order], split=split)


def gen_hypersphere(cfg: HypersphereConfig) -> dict[str, Dataset]:
    """Train/val/test datasets with equal class shares, each split drawn
    from its own derived random stream so the splits never overlap."""
    return {
        "train": _gen_split(cfg, cfg.n_train, "train", 0),
        "val": _gen_split(cfg, cfg.n_val, "val", 1),
        "test": _gen_split(cfg, cfg.n_test, "test", 2),
    }


# ---------------------------------------------------------------------------
# scaling
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MinMaxScaler:
    """Per-feature affine map fitted on the training split sending the
    observed [min, max] onto [-1, 1]; constant columns map to 0."""

    col_min: np.ndarray
    col_max: np.ndarray

    @classmethod
    def fit(cls, features: np.ndarray) -> "MinMaxScaler":
        features = np.asarray(features, dtype=float)
        return cls(col_min=features.min(axis=0), col_max=features.max(axis=0))

    def transform(self, features: np.ndarray) -> np.ndarray:
        features = np.asarray(features, dtype=float)
        span = self.col_max - self.col_min
        safe = np.where(span == 0, 1.0, span)
        scaled = 2.0 * (features - self.col_min) / safe - 1.0
        return np.where(span == 0, 0.0, scaled)

    def inverse_transform(self, scaled: np.ndarray) -> np.ndarray:
        scaled = np.asarray(scaled, dtype=float)
        span = self.col_max - self.col_min
        return np.where(
            span == 0, self.col_min, (scaled + 1.0) * 0.5 * span + self.col_min
        )

    def to_json(self) -> dict:
        return {
            "schema": "minmax_scaler",
            "col_min": self.col_min.tolist(),
            "col_max": self.col_max.tolist(),
        }


def minmax_scale(train: Dataset, *others: Dataset) -> tuple[list[Dataset], MinMaxScaler]:
    """Fit on the training split, apply to it and every other split."""
    scaler = MinMaxScaler.fit(train.features)
    scaled = [replace(ds, features=scaler.transform(ds.features)) for ds in (train, *others)]
    return scaled, scaler


# ---------------------------------------------------------------------------
# CSV round trip
# ---------------------------------------------------------------------------


def save_csv(path, dataset: Dataset) -> None:
    d = dataset.d_inp
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join([f"f{i}" for i in range(d)] + ["label"]) + "\n")
        for row, label in zip(dataset.features, dataset.labels):
            fh.write(",".join(repr(float(v)) for v in row) + f",{int(label)}\n")


def load_csv(path, label_column: str = "label", split: str = "") -> Dataset:
    """Parse a labelled CSV; malformed cells raise with their line number."""
    with open(path, "r", encoding="utf-8") as fh:
        return _parse_csv(fh, label_column, split, name=str(path))


def _parse_csv(fh: io.TextIOBase, label_column: str, split: str, name: str) -> Dataset:
    header_line = fh.readline()
    if not header_line:
        raise DataFormatError(f"{name}: empty file")
    header = [h.strip() for h in header_line.rstrip("\n").split(",")]
    if label_column not in header:
        raise DataFormatError(f"{name}: header has no {label_column!r} column")
    label_pos = header.index(label_column)
    feature_pos = [i for i in range(len(header)) if i != label_pos]
    rows: list[list[float]] = []
    labels: list[int] = []
    for line_no, line in enumerate(fh, start=2):
        if not line.strip():
            continue
        cells = line.rstrip("\n").split(",")
        if len(cells) != len(header):
            raise DataFormatError(
                f"{name}: line {line_no}: {len(cells)} cells, expected {len(header)}"
            )
        try:
            values = [float(cells[i]) for i in feature_pos]
        except ValueError as exc:
            raise DataFormatError(f"{name}: line {line_no}: {exc}") from exc
        if any(not np.isfinite(v) for v in values):
            raise DataFormatError(f"{name}: line {line_no}: non-finite feature value")
        raw_label = cells[label_pos].strip()
        try:
            label = int(raw_label)
        except ValueError as exc:
            raise DataFormatError(
                f"{name}: line {line_no}: label {raw_label!r} is not an integer"
            ) from exc
        if label < 0:
            raise DataFormatError(f"{name}: line {line_no}: negative label {label}")
        rows.append(values)
        labels.append(label)
    if not rows:
        raise DataFormatError(f"{name}: no data rows")
    return Dataset(np.asarray(rows), np.asarray(labels, dtype=int), split=split)


def split_rows(
    dataset: Dataset, n_train: int, n_val: int, n_test: int, seed: int
) -> dict[str, Dataset]:
    """Seeded shuffle of an ingested dataset into three disjoint splits."""
    total = n_train + n_val + n_test
    if total > dataset.n_samples:
        raise ValidationError(
            f"requested {total} rows but the dataset has {dataset.n_samples}"
        )
    order = np.random.default_rng([seed, 3]).permutation(dataset.n_samples)
    bounds = {
        "train": order[:n_train],
        "val": order[n_train : n_train + n_val],
        "test": order[n_train + n_val : total],
    }
    return {
        name: Dataset(dataset.features[idx], dataset.labels[idx], split=name)
        for name, idx in bounds.items()
    }
