"""Training loop: Adam over shuffled minibatches with plateau LR decay,
early stopping, and best-validation-epoch weight selection.

Everything is driven by explicit integer seeds; two runs with the same seed
produce bit-identical loss histories and weights.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass

import numpy as np

from .ansatz import AnsatzSpec, ansatz_from_json, ansatz_to_json
from .config import DEFAULT_TOLERANCES, Tolerances
from .errors import DivergenceError, ValidationError
from .metrics import (
    Metrics,
    confusion_matrix,
    one_vs_all_auc,
    predicted_classes,
    roc_auc,
)
from .model import (
    BINARY,
    ModelState,
    forward_batch,
    loss_and_gradient,
    loss_with_grad,
    new_model,
    predict_scores,
    prepare_psi0,
    task_for,
)


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 0.001
    lr_decay_factor: float = 0.1
    lr_patience: int = 3
    early_stop_patience: int = 20
    max_epochs: int = 300
    batch_size: int = 128
    n_runs: int = 5
    seed: int = 0

    def __post_init__(self):
        positive = {
            "lr": self.lr,
            "lr_decay_factor": self.lr_decay_factor,
            "lr_patience": self.lr_patience,
            "early_stop_patience": self.early_stop_patience,
            "max_epochs": self.max_epochs,
            "batch_size": self.batch_size,
            "n_runs": self.n_runs,
        }
        for name, value in positive.items():
            if value <= 0:
                raise ValidationError(f"{name} must be positive, got {value!r}")
        if self.lr_patience >= self.max_epochs or self.early_stop_patience >= self.max_epochs:
            raise ValidationError("patience values must be smaller than max_epochs")


class PlateauTracker:
    """Strict-improvement tracker driving the LR schedule and early stop.

    An epoch counts as improving only when the validation loss beats the
    best seen so far by more than ``min_delta``.  The LR decays once the
    bad-epoch streak exceeds ``lr_patience`` (streak resets after a decay);
    training stops once the streak since the last improvement reaches
    ``stop_patience``.
    """

    def __init__(
        self,
        lr: float,
        decay_factor: float,
        lr_patience: int,
        stop_patience: int,
        min_delta: float = DEFAULT_TOLERANCES.val_improvement_atol,
    ):
        self.lr = lr
        self.decay_factor = decay_factor
        self.lr_patience = lr_patience
        self.stop_patience = stop_patience
        self.min_delta = min_delta
        self.best = float("inf")
        self._bad_lr = 0
        self._bad_stop = 0

    def update(self, val_loss: float) -> tuple[bool, bool, bool]:
        """Returns (improved, lr_decayed, should_stop)."""
        improved = val_loss < self.best - self.min_delta
        decayed = False
        if improved:
            self.best = val_loss
            self._bad_lr = 0
            self._bad_stop = 0
        else:
            self._bad_lr += 1
            self._bad_stop += 1
            if self._bad_lr > self.lr_patience:
                self.lr *= self.decay_factor
                self._bad_lr = 0
                decayed = True
        return improved, decayed, self._bad_stop >= self.stop_patience


class Adam:
    def __init__(self, size: int, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = np.zeros(size)
        self.v = np.zeros(size)
        self.t = 0

    def step(self, params: np.ndarray, grads: np.ndarray) -> np.ndarray:
        self.t += 1
        self.m = self.beta1 * self.m + (1.0 - self.beta1) * grads
        self.v = self.beta2 * self.v + (1.0 - self.beta2) * grads**2
        m_hat = self.m / (1.0 - self.beta1**self.t)
        v_hat = self.v / (1.0 - self.beta2**self.t)
        return params - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def _dataset_loss(model: ModelState, features: np.ndarray, labels: np.ndarray, task: str, batch_size: int) -> float:
    outputs = []
    for start in range(0, features.shape[0], batch_size):
        outputs.append(forward_batch(model, features[start : start + batch_size]))
    value, _ = loss_with_grad(np.concatenate(outputs, axis=0), labels, task)
    return value


def train(
    model: ModelState,
    train_features,
    train_labels,
    val_features,
    val_labels,
    cfg: TrainConfig,
    tol: Tolerances = DEFAULT_TOLERANCES,
    verbose: bool = False,
) -> tuple[ModelState, Metrics]:
    """Train a model, returning the weights of the best validation epoch."""
    train_features = np.asarray(train_features, dtype=float)
    train_labels = np.asarray(train_labels)
    val_features = np.asarray(val_features, dtype=float)
    val_labels = np.asarray(val_labels)
    if train_features.shape[0] == 0 or val_features.shape[0] == 0:
        raise ValidationError("training and validation splits must be non-empty")
    task = task_for(model.spec)
    n_w = model.circuit_weights.size
    params = np.concatenate([model.circuit_weights, model.readout_weights])
    optimizer = Adam(params.size, cfg.lr)
    tracker = PlateauTracker(
        cfg.lr,
        cfg.lr_decay_factor,
        cfg.lr_patience,
        cfg.early_stop_patience,
        min_delta=tol.val_improvement_atol,
    )
    rng = np.random.default_rng([cfg.seed, 0])
    metrics = Metrics()
    best_params = params.copy()
    n_train = train_features.shape[0]
    started = time.perf_counter()
    for epoch in range(1, cfg.max_epochs + 1):
        order = rng.permutation(n_train)
        loss_sum = 0.0
        current = model.with_weights(params[:n_w], params[n_w:])
        for start in range(0, n_train, cfg.batch_size):
            batch_idx = order[start : start + cfg.batch_size]
            try:
                value, grad_w, grad_u = loss_and_gradient(
                    current, train_features[batch_idx], train_labels[batch_idx], task
                )
            except DivergenceError as exc:
                raise DivergenceError(
                    f"epoch {epoch}, batch {start // cfg.batch_size}: {exc}"
                ) from exc
            params = optimizer.step(params, np.concatenate([grad_w, grad_u]))
            current = model.with_weights(params[:n_w], params[n_w:])
            loss_sum += value * batch_idx.size
        train_loss = loss_sum / n_train
        val_loss = _dataset_loss(current, val_features, val_labels, task, cfg.batch_size)
        improved, _, should_stop = tracker.update(val_loss)
        optimizer.lr = tracker.lr
        metrics.train_losses.append(train_loss)
        metrics.val_losses.append(val_loss)
        metrics.lr_history.append(tracker.lr)
        if improved:
            best_params = params.copy()
            metrics.best_epoch = epoch
            metrics.best_val_loss = val_loss
        if verbose:
            print(
                f"epoch {epoch:4d}  train {train_loss:.6f}  val {val_loss:.6f}"
                f"  lr {tracker.lr:.2e}"
            )
        if should_stop:
            break
    metrics.stopped_epoch = len(metrics.train_losses)
    metrics.wall_clock_s = time.perf_counter() - started
    best = model.with_weights(best_params[:n_w], best_params[n_w:])
    return best, metrics


def evaluate(model: ModelState, features, labels) -> dict:
    """Test metrics: AUC (per class one-vs-all when multi-class), accuracy,
    and the confusion matrix normalized over true labels."""
    features = np.asarray(features, dtype=float)
    labels = np.asarray(labels, dtype=int)
    scores = predict_scores(model, features)
    if model.spec.d_out == 1:
        auc = roc_auc(scores, labels)
        preds = (scores > 0.5).astype(int)
        n_classes = 2
        auc_macro = auc
        per_class = None
    else:
        per_class_arr = one_vs_all_auc(scores, labels)
        per_class = [float(a) for a in per_class_arr]
        auc_macro = float(per_class_arr.mean())
        preds = predicted_classes(scores)
        n_classes = model.spec.d_out
        auc = per_class
    counts, normalized = confusion_matrix(preds, labels, n_classes)
    return {
        "auc": auc,
        "auc_macro": float(auc_macro),
        "per_class_auc": per_class,
        "accuracy": float((preds == labels).mean()),
        "confusion_counts": counts.tolist(),
        "confusion": normalized.tolist(),
    }


# ---------------------------------------------------------------------------
# multi-run suites
# ---------------------------------------------------------------------------


def run_suite(
    spec: AnsatzSpec,
    splits: dict,
    cfg: TrainConfig,
    psi0_seed: int,
    verbose: bool = False,
) -> tuple[list[ModelState], list[Metrics], dict]:
    """Train ``cfg.n_runs`` models from fresh initializations.

    Run k draws its weights from seed ``[cfg.seed, k]``; the reference state
    is shared across runs.  The summary carries per-run and aggregate test
    AUC in a fixed layout (no timing data, so identical seeds reproduce it
    byte for byte).
    """
    models: list[ModelState] = []
    run_metrics: list[Metrics] = []
    aucs: list[float] = []
    per_class: list[list[float]] = []
    for run in range(cfg.n_runs):
        run_model = new_model(spec, seed=_run_seed(cfg.seed, run), psi0_seed=psi0_seed)
        best, metrics = train(
            run_model,
            splits["train"].features,
            splits["train"].labels,
            splits["val"].features,
            splits["val"].labels,
            cfg,
            verbose=verbose,
        )
        report = evaluate(best, splits["test"].features, splits["test"].labels)
        metrics.test_auc = report["auc"]
        metrics.confusion = report["confusion"]
        aucs.append(report["auc_macro"])
        if report["per_class_auc"] is not None:
            per_class.append(report["per_class_auc"])
        models.append(best)
        run_metrics.append(metrics)
    summary = {
        "kind": spec.kind,
        "n_qubits": spec.n_qubits,
        "d_inp": spec.d_inp,
        "d_out": spec.d_out,
        "n_layers": spec.n_layers,
        "n_runs": cfg.n_runs,
        "seed": cfg.seed,
        "psi0_seed": psi0_seed,
        "auc_per_run": aucs,
        "auc_mean": float(np.mean(aucs)),
        "auc_std": float(np.std(aucs)),
        "auc_best": float(np.max(aucs)),
    }
    if per_class:
        stacked = np.asarray(per_class)
        summary["per_class_auc_mean"] = [float(v) for v in stacked.mean(axis=0)]
        summary["per_class_auc_std"] = [float(v) for v in stacked.std(axis=0)]
        summary["per_class_auc_best"] = [float(v) for v in stacked.max(axis=0)]
    return models, run_metrics, summary


def _run_seed(base_seed: int, run: int) -> list[int]:
    return [base_seed, run]


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------


def checkpoint_to_json(model: ModelState, epoch: int, val_loss: float) -> dict:
    if model.psi0_seed is None:
        raise ValidationError("checkpointing requires a seeded reference state")
    return {
        "schema": "checkpoint",
        "spec": ansatz_to_json(model.spec),
        "circuit_weights": model.circuit_weights.tolist(),
        "readout_weights": model.readout_weights.tolist(),
        "psi0_seed": model.psi0_seed,
        "epoch": epoch,
        "val_loss": val_loss,
    }


def checkpoint_from_json(doc: dict) -> tuple[ModelState, int, float]:
    if doc.get("schema") != "checkpoint":
        raise ValidationError("document is not a checkpoint schema")
    spec = ansatz_from_json(doc["spec"])
    psi0_seed = int(doc["psi0_seed"])
    model = ModelState(
        spec=spec,
        circuit_weights=np.asarray(doc["circuit_weights"], dtype=float),
        readout_weights=np.asarray(doc["readout_weights"], dtype=float),
        psi0=prepare_psi0(spec.n_qubits, psi0_seed),
        psi0_seed=psi0_seed,
    )
    return model, int(doc["epoch"]), float(doc["val_loss"])


def save_checkpoint(path, model: ModelState, epoch: int, val_loss: float) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(checkpoint_to_json(model, epoch, val_loss), fh, indent=1)
        fh.write("\n")


def load_checkpoint(path) -> tuple[ModelState, int, float]:
    with open(path, "r", encoding="utf-8") as fh:
        return checkpoint_from_json(json.load(fh))
