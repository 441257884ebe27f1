"""Losses, metrics, cross-validation splitting, and the training loop.

Metrics are always session-level: per-window outputs are averaged into one
decision per subject before any score is computed.
"""

import copy
import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError, NumericalError
from .numcore import adam_init, adam_step, make_rng, sigmoid
from .sequencing import stack_pairs

PROB_CLAMP = 1e-12


@dataclass
class TrainConfig:
    task: str = "cls"  # "cls" | "reg"
    lr: float = 1e-4
    epochs: int = 200
    batch_size: int = 16
    seed: int = 0
    patience: int = 20  # 0 disables early stopping
    folds: int = 5

    def validate(self):
        if self.task not in ("cls", "reg"):
            raise ConfigError(f"unknown task {self.task!r}")
        if self.lr < 0:
            raise ConfigError("learning rate must be >= 0")
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigError("epochs and batch size must be >= 1")
        if self.folds < 2:
            raise ConfigError("cross-validation needs at least 2 folds")
        return self


# -- losses -------------------------------------------------------------------


def bce_loss(p, y):
    """Elementwise binary cross-entropy with probabilities clamped away
    from 0 and 1."""
    p = np.clip(np.asarray(p, dtype=np.float64), PROB_CLAMP, 1.0 - PROB_CLAMP)
    y = np.asarray(y, dtype=np.float64)
    return -(y * np.log(p) + (1.0 - y) * np.log1p(-p))


def bce_grad(p, y):
    """dL/dp of the clamped binary cross-entropy."""
    p = np.clip(np.asarray(p, dtype=np.float64), PROB_CLAMP, 1.0 - PROB_CLAMP)
    y = np.asarray(y, dtype=np.float64)
    return -y / p + (1.0 - y) / (1.0 - p)


def rmse(preds, golds):
    preds = np.asarray(preds, dtype=np.float64)
    golds = np.asarray(golds, dtype=np.float64)
    if preds.shape != golds.shape or preds.size == 0:
        raise DataError("RMSE needs equal-length, non-empty vectors")
    return float(np.sqrt(np.mean((preds - golds) ** 2)))


def loss_and_grads(model, params, xa, xt, targets, task, dropout_rng=None):
    """Mean loss over one batch plus gradients for every parameter.

    cls trains through the fused sigmoid + cross-entropy derivative
    (p - y); the clamp in ``bce_loss`` only guards the reported value.
    """
    raw, cache = model.forward_train(params, xa, xt, task, dropout_rng)
    n = raw.shape[0]
    if task == "cls":
        p = sigmoid(raw)
        loss = float(np.mean(bce_loss(p, targets)))
        d_raw = (p - targets) / n
    else:
        diff = raw - targets
        loss = float(np.mean(diff**2))
        d_raw = 2.0 * diff / n
    grads = model.backward(params, cache, d_raw)
    return loss, grads


# -- metrics ------------------------------------------------------------------


@dataclass
class MetricsReport:
    """Session-level evaluation summary; regression runs fill only rmse."""

    accuracy: float | None = None
    precision_ad: float | None = None
    recall_ad: float | None = None
    f1_ad: float | None = None
    precision_nonad: float | None = None
    recall_nonad: float | None = None
    f1_nonad: float | None = None
    rmse: float | None = None
    confusion: dict = field(default_factory=dict)

    def to_json_dict(self):
        """All fields with floats rounded to 4 decimal places."""
        out = {}
        for key in (
            "accuracy",
            "precision_ad",
            "recall_ad",
            "f1_ad",
            "precision_nonad",
            "recall_nonad",
            "f1_nonad",
            "rmse",
        ):
            value = getattr(self, key)
            out[key] = None if value is None else round(value, 4)
        out["confusion"] = dict(self.confusion)
        return out


def _precision_recall_f1(tp, fp, fn):
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    f1 = 2.0 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return precision, recall, f1


def compute_metrics(pred_labels, gold_labels):
    """Confusion counts and derived metrics with AD (1) as positive class;
    the non-AD metrics use the swapped confusion (tn, fn, fp, tp)."""
    preds = np.asarray(pred_labels, dtype=int)
    golds = np.asarray(gold_labels, dtype=int)
    if preds.shape != golds.shape or preds.size == 0:
        raise DataError("metrics need equal-length, non-empty label vectors")
    tp = int(np.sum((preds == 1) & (golds == 1)))
    fp = int(np.sum((preds == 1) & (golds == 0)))
    fn = int(np.sum((preds == 0) & (golds == 1)))
    tn = int(np.sum((preds == 0) & (golds == 0)))
    p_ad, r_ad, f_ad = _precision_recall_f1(tp, fp, fn)
    p_non, r_non, f_non = _precision_recall_f1(tn, fn, fp)
    return MetricsReport(
        accuracy=(tp + tn) / preds.size,
        precision_ad=p_ad,
        recall_ad=r_ad,
        f1_ad=f_ad,
        precision_nonad=p_non,
        recall_nonad=r_non,
        f1_nonad=f_non,
        confusion={"tp": tp, "fp": fp, "fn": fn, "tn": tn},
    )


# -- cross-validation ---------------------------------------------------------


def split_cv(labeled_sessions, folds, seed):
    """Deterministic stratified fold assignment: {session_id: fold}.

    ``labeled_sessions`` is an iterable of (session_id, label) pairs; ids
    are shuffled within each label group and dealt round-robin.
    """
    items = sorted(labeled_sessions)
    if folds < 2:
        raise ConfigError("cross-validation needs at least 2 folds")
    if folds > len(items):
        raise ConfigError(f"{folds} folds but only {len(items)} sessions")
    rng = make_rng(seed)
    assignment = {}
    for label in sorted({lab for _, lab in items}):
        ids = [sid for sid, lab in items if lab == label]
        order = rng.permutation(len(ids))
        for j, idx in enumerate(order):
            assignment[ids[idx]] = j % folds
    return assignment


# -- session-level evaluation ---------------------------------------------------


def session_outputs(model, params, pairs, task, batch_size=256):
    """Mean per-window model output for every session in ``pairs``."""
    if not pairs:
        raise DataError("no window pairs to evaluate")
    outputs = np.empty(len(pairs))
    for start in range(0, len(pairs), batch_size):
        chunk = pairs[start : start + batch_size]
        xa, xt, _, _ = stack_pairs(chunk, model.config.modality)
        outputs[start : start + len(chunk)] = model.forward(params, xa, xt, task)
    sums, counts, golds = {}, {}, {}
    for pair, out in zip(pairs, outputs):
        sums[pair.session_id] = sums.get(pair.session_id, 0.0) + float(out)
        counts[pair.session_id] = counts.get(pair.session_id, 0) + 1
        golds[pair.session_id] = (pair.label, pair.mmse)
    means = {sid: sums[sid] / counts[sid] for sid in sums}
    return means, golds


def evaluate(model, params, pairs, task):
    """Session-level MetricsReport for one window-pair set."""
    means, golds = session_outputs(model, params, pairs, task)
    sids = sorted(means)
    if task == "cls":
        preds = [1 if means[s] >= 0.5 else 0 for s in sids]
        gold = [golds[s][0] for s in sids]
        return compute_metrics(preds, gold)
    ests = [min(30.0, max(0.0, means[s])) for s in sids]
    gold = [golds[s][1] for s in sids]
    return MetricsReport(rmse=rmse(ests, gold))


def val_metric_of(report, task):
    return report.accuracy if task == "cls" else report.rmse


def _improved(candidate, best, task):
    if best is None:
        return True
    return candidate > best if task == "cls" else candidate < best


# -- training loop --------------------------------------------------------------


@dataclass
class TrainResult:
    params: dict  # best-validation parameters
    history: list  # (epoch, train_loss, val_metric)
    best_epoch: int
    best_metric: float


def train(model, train_pairs, config, val_pairs=None):
    """Mini-batch Adam over window pairs with best-checkpoint retention.

    The validation metric is session accuracy (cls) or session RMSE (reg),
    computed on ``val_pairs`` when given, else on the training pairs.
    Raises NumericalError as soon as a batch loss goes non-finite.
    """
    config.validate()
    if not train_pairs:
        raise DataError("no training window pairs")
    task = config.task
    rng = make_rng(config.seed)
    params = model.init_params(rng)
    state = adam_init(params, lr=config.lr)
    eval_pairs = val_pairs if val_pairs else train_pairs
    targets_all = np.array(
        [p.label if task == "cls" else p.mmse for p in train_pairs], dtype=np.float64
    )
    best_params = copy.deepcopy(params)
    best_metric = None
    best_epoch = 0
    since_best = 0
    history = []
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(len(train_pairs))
        total, seen = 0.0, 0
        for start in range(0, len(order), config.batch_size):
            idx = order[start : start + config.batch_size]
            chunk = [train_pairs[i] for i in idx]
            xa, xt, _, _ = stack_pairs(chunk, model.config.modality)
            loss, grads = loss_and_grads(
                model, params, xa, xt, targets_all[idx], task,
                dropout_rng=rng if model.config.dropout > 0 else None,
            )
            if not np.isfinite(loss):
                raise NumericalError(
                    f"training diverged: non-finite loss at epoch {epoch}"
                )
            params, state = adam_step(params, grads, state)
            total += loss * len(idx)
            seen += len(idx)
        train_loss = total / seen
        metric = val_metric_of(evaluate(model, params, eval_pairs, task), task)
        history.append((epoch, train_loss, metric))
        if _improved(metric, best_metric, task):
            best_metric = metric
            best_epoch = epoch
            best_params = copy.deepcopy(params)
            since_best = 0
        else:
            since_best += 1
            if config.patience > 0 and since_best >= config.patience:
                break
    return TrainResult(best_params, history, best_epoch, best_metric)


# -- report / history files -----------------------------------------------------


def write_history(path, history):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "train_loss", "val_metric"])
        for epoch, loss, metric in history:
            writer.writerow([epoch, f"{loss:.12g}", f"{metric:.12g}"])


def write_metrics_json(path, report):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.to_json_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
