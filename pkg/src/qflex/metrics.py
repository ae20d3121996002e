"""Ranking and classification metrics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeError, ValidationError


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks with ties replaced by the mean rank of the tie group."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.size, dtype=float)
    sorted_vals = values[order]
    i = 0
    while i < values.size:
        j = i + 1
        while j < values.size and sorted_vals[j] == sorted_vals[i]:
            j += 1
        ranks[order[i:j]] = 0.5 * (i + 1 + j)
        i = j
    return ranks


def roc_auc(scores, labels) -> float:
    """Area under the ROC curve via the rank-sum formulation.

    Ties get the average-rank correction, which matches trapezoidal
    integration of the ROC curve.
    """
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise ShapeError("scores and labels must be matching one-dimensional arrays")
    positives = labels == 1
    n_pos = int(positives.sum())
    n_neg = scores.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValidationError("AUC needs at least one positive and one negative")
    ranks = _average_ranks(scores)
    rank_sum = float(ranks[positives].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def one_vs_all_auc(probabilities, labels) -> np.ndarray:
    """Per-class AUC of each probability column against the rest."""
    probabilities = np.asarray(probabilities, dtype=float)
    labels = np.asarray(labels)
    if probabilities.ndim != 2:
        raise ShapeError("probabilities must be (samples, classes)")
    return np.array(
        [
            roc_auc(probabilities[:, c], (labels == c).astype(int))
            for c in range(probabilities.shape[1])
        ]
    )


def confusion_matrix(predictions, labels, n_classes: int) -> tuple[np.ndarray, np.ndarray]:
    """Counts and the row-normalized matrix (rows indexed by true label).

    Rows of the normalized matrix sum to one; rows for absent classes stay
    zero.
    """
    predictions = np.asarray(predictions, dtype=int)
    labels = np.asarray(labels, dtype=int)
    if predictions.shape != labels.shape:
        raise ShapeError("predictions and labels must have matching shapes")
    counts = np.zeros((n_classes, n_classes), dtype=int)
    np.add.at(counts, (labels, predictions), 1)
    totals = counts.sum(axis=1, keepdims=True)
    normalized = np.divide(
        counts, totals, out=np.zeros_like(counts, dtype=float), where=totals > 0
    )
    return counts, normalized


def predicted_classes(outputs) -> np.ndarray:
    """argmax class per row; single-column outputs threshold at zero."""
    outputs = np.asarray(outputs, dtype=float)
    if outputs.ndim == 1 or outputs.shape[1] == 1:
        return (outputs.reshape(-1) > 0).astype(int)
    return outputs.argmax(axis=1)


@dataclass
class Metrics:
    """Per-run training record."""

    train_losses: list[float] = field(default_factory=list)
    val_losses: list[float] = field(default_factory=list)
    best_epoch: int = -1
    best_val_loss: float = float("inf")
    stopped_epoch: int = -1
    lr_history: list[float] = field(default_factory=list)
    test_auc: float | list[float] | None = None
    confusion: list[list[float]] | None = None
    wall_clock_s: float = 0.0

    def to_json(self) -> dict:
        return {
            "train_losses": self.train_losses,
            "val_losses": self.val_losses,
            "best_epoch": self.best_epoch,
            "best_val_loss": self.best_val_loss,
            "stopped_epoch": self.stopped_epoch,
            "lr_history": self.lr_history,
            "test_auc": self.test_auc,
            "confusion": self.confusion,
            "wall_clock_s": self.wall_clock_s,
        }
