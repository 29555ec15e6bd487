"""Seeded Adam training loop, classification metrics, evaluation.

Works with any model exposing `params` (dict name -> ndarray, updated in
place) and `loss_and_grads(X, y)`.  Models with a `trim_hook` get it fired
every `trim_period_epochs` epochs and once more after the final epoch.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from ..errors import DivergenceError, InsufficientDataError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Metrics:
    precision: float
    recall: float
    f1: float
    accuracy: float
    tp: int
    fp: int
    fn: int
    tn: int

    def to_dict(self):
        return {"precision": self.precision, "recall": self.recall, "f1": self.f1,
                "accuracy": self.accuracy, "tp": self.tp, "fp": self.fp,
                "fn": self.fn, "tn": self.tn}


def metrics_from_counts(tp, fp, fn, tn):
    total = tp + fp + fn + tn
    if total == 0:
        raise InsufficientDataError("no predictions to score")
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    if precision + recall > 0:
        f1 = 2.0 * precision * recall / (precision + recall)
    else:
        f1 = 0.0
        log.warning("precision + recall = 0; F1 reported as 0 by convention")
    return Metrics(precision=precision, recall=recall, f1=f1,
                   accuracy=(tp + tn) / total, tp=tp, fp=fp, fn=fn, tn=tn)


def evaluate(model, X, y):
    """Score a model on a test set, thresholding P(class 1) at 0.5."""
    y = np.asarray(y)
    if len(y) == 0:
        raise InsufficientDataError("empty test set")
    pred = (np.asarray(model.predict_proba(X))[:, 1] >= 0.5).astype(np.int64)
    tp = int(np.sum((pred == 1) & (y == 1)))
    fp = int(np.sum((pred == 1) & (y == 0)))
    fn = int(np.sum((pred == 0) & (y == 1)))
    tn = int(np.sum((pred == 0) & (y == 0)))
    return metrics_from_counts(tp, fp, fn, tn)


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-3
    epochs: int = 100
    batch_size: int = 16
    seed: int = 0

    def to_dict(self):
        return {"lr": self.lr, "epochs": self.epochs,
                "batch_size": self.batch_size, "seed": self.seed}


class Adam:
    """Adam with bias correction; beta1=0.9, beta2=0.999, eps=1e-8."""

    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, grads):
        self.t += 1
        b1c = 1.0 - self.beta1**self.t
        b2c = 1.0 - self.beta2**self.t
        for name, g in grads.items():
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            self.params[name] -= self.lr * (m / b1c) / (np.sqrt(v / b2c) + self.eps)


def _take(X, idx):
    if isinstance(X, np.ndarray):
        return X[idx]
    return [X[i] for i in idx]


def train(model, X, y, config=TrainConfig()):
    """Mini-batch Adam training; returns the per-epoch mean loss curve.

    Deterministic given the seed: shuffling uses one generator drawn from
    config.seed and nothing else consumes randomness.
    """
    y = np.asarray(y)
    n = len(y)
    if n == 0:
        raise InsufficientDataError("empty training set")
    rng = np.random.default_rng(config.seed)
    optimizer = Adam(model.params, lr=config.lr)
    trim_hook = getattr(model, "trim_hook", None)
    trim_period = getattr(model, "trim_period_epochs", None)

    curve = []
    last_trim_epoch = -1
    for epoch in range(config.epochs):
        perm = rng.permutation(n)
        total = 0.0
        for start in range(0, n, config.batch_size):
            idx = perm[start:start + config.batch_size]
            loss, grads = model.loss_and_grads(_take(X, idx), y[idx])
            if not math.isfinite(loss):
                raise DivergenceError(f"loss became {loss} at epoch {epoch}", epoch=epoch)
            optimizer.step(grads)
            total += loss * len(idx)
        curve.append(total / n)
        if trim_hook is not None and trim_period and (epoch + 1) % trim_period == 0:
            trim_hook()
            last_trim_epoch = epoch
    if trim_hook is not None and trim_period and last_trim_epoch != config.epochs - 1:
        trim_hook()  # leave the model in post-trim (band-limited) form
    aff = getattr(model, "aff", None)
    if trim_hook is not None and aff is not None:
        empty = int(np.sum(~aff.weights.any(axis=0)))
        if empty:
            log.info("%d of %d AFF columns ended with empty support", empty, aff.d_new)
    return curve
