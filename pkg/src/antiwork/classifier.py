"""Linear hinge-loss models, the recurrent sequence model, training and metrics."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigError
from . import kernels

log = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "antiwork-checkpoint"
CHECKPOINT_VERSION = 1


class TrainingError(RuntimeError):
    pass


class ShapeError(ValueError):
    pass


# ---------------------------------------------------------------- metrics


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    precision: float
    recall: float
    f1: float
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    def to_dict(self, confusion: bool = False) -> dict:
        out = {"accuracy": self.accuracy, "precision": self.precision, "recall": self.recall, "f1": self.f1}
        if confusion:
            out.update(tp=self.tp, fp=self.fp, fn=self.fn, tn=self.tn)
        return out


def metrics_from_confusion(tp: int, fp: int, fn: int, tn: int) -> Metrics:
    n = tp + fp + fn + tn
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return Metrics((tp + tn) / n if n else 0.0, precision, recall, f1, tp, fp, fn, tn)


def compute_metrics(y_true, y_pred) -> Metrics:
    """Positive class is 1 (antiwork)."""
    y_true = np.asarray(y_true, dtype=int)
    y_pred = np.asarray(y_pred, dtype=int)
    if y_true.shape != y_pred.shape or y_true.size == 0:
        raise ValueError("need equal-length, non-empty label arrays")
    tp = int(np.sum((y_true == 1) & (y_pred == 1)))
    fp = int(np.sum((y_true == 0) & (y_pred == 1)))
    fn = int(np.sum((y_true == 1) & (y_pred == 0)))
    tn = int(np.sum((y_true == 0) & (y_pred == 0)))
    return metrics_from_confusion(tp, fp, fn, tn)


def evaluate_scores(scores, y_true) -> Metrics:
    """Threshold decision scores (logits) at 0."""
    return compute_metrics(y_true, (np.asarray(scores) > 0).astype(int))


class RandomBaseline:
    """Predicts each class with probability 1/2 from a seeded stream."""

    def __init__(self, seed: int = 0):
        self.seed = seed

    def predict(self, n: int) -> np.ndarray:
        return np.random.default_rng(self.seed).integers(0, 2, size=n)


# ---------------------------------------------------------------- linear


@dataclass
class LinearModel:
    weights: np.ndarray
    bias: float
    feature_names: list[str]
    mean: np.ndarray | None = None
    scale: np.ndarray | None = None
    loss_trace: list[float] = field(default_factory=list, repr=False)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.shape != (len(self.feature_names),):
            raise ShapeError(f"{self.weights.shape[0]} weights for {len(self.feature_names)} feature names")

    def _prep(self, X):
        if self.mean is not None:
            return (np.asarray(X, dtype=float) - self.mean) / self.scale
        return X

    def decision_function(self, X) -> np.ndarray:
        return np.asarray(self._prep(X) @ self.weights).ravel() + self.bias

    def predict(self, X) -> np.ndarray:
        return (self.decision_function(X) > 0).astype(int)

    def to_dict(self) -> dict:
        return {
            "weights": self.weights.tolist(),
            "bias": self.bias,
            "feature_names": list(self.feature_names),
            "mean": None if self.mean is None else self.mean.tolist(),
            "scale": None if self.scale is None else self.scale.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LinearModel":
        arr = lambda v: None if v is None else np.asarray(v, dtype=float)  # noqa: E731
        return cls(np.asarray(d["weights"]), float(d["bias"]), list(d["feature_names"]), arr(d["mean"]), arr(d["scale"]))


def standardizer(X) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=float)
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale == 0] = 1.0
    return mean, scale


def _hinge_objective(X, ys, w, b, l2):
    margins = ys * (np.asarray(X @ w).ravel() + b)
    return float(np.mean(np.maximum(0.0, 1.0 - margins)) + l2 * (w @ w)), margins


def train_linear(
    X,
    y,
    l2: float = 1e-3,
    epochs: int = 300,
    seed: int = 0,
    feature_names: Sequence[str] | None = None,
    standardize: bool = False,
    lr: float = 1.0,
) -> LinearModel:
    """Minimize mean hinge loss + l2*||w||^2 by full-batch subgradient descent.

    Each epoch takes one step whose size is halved until the objective does not
    increase, so the recorded objective trace is non-increasing.  ``seed``
    draws the small random initial weights.
    """
    y = np.asarray(y, dtype=int)
    if X.shape[0] != y.shape[0]:
        raise ShapeError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
    if l2 <= 0:
        raise ConfigError("l2 must be positive")
    if len(np.unique(y)) < 2:
        raise ConfigError("train_linear needs both classes present in y")
    n, dim = X.shape
    names = list(feature_names) if feature_names is not None else [f"f{i}" for i in range(dim)]
    mean = scale = None
    if standardize:
        mean, scale = standardizer(X)
        X = (np.asarray(X, dtype=float) - mean) / scale
    ys = np.where(y == 1, 1.0, -1.0)
    rng = np.random.default_rng(seed)
    w = rng.normal(scale=1e-3, size=dim)
    b = 0.0
    obj, margins = _hinge_objective(X, ys, w, b, l2)
    trace = [obj]
    step = lr
    for _ in range(epochs):
        coef = np.where(margins < 1.0, -ys, 0.0) / n
        gw = np.asarray(X.T @ coef).ravel() + 2.0 * l2 * w
        gb = float(coef.sum())
        for _ in range(50):
            w_new, b_new = w - step * gw, b - step * gb
            obj_new, m_new = _hinge_objective(X, ys, w_new, b_new, l2)
            if obj_new <= obj:
                w, b, obj, margins = w_new, b_new, obj_new, m_new
                step *= 1.5
                break
            step *= 0.5
        trace.append(obj)
    model = LinearModel(w, b, names, mean, scale)
    model.loss_trace = trace
    return model


def inspect_weights(model: LinearModel, k: int) -> list[tuple[str, float]]:
    """Top-k (feature, weight) by |weight|, ties broken by feature name."""
    k = max(0, min(k, len(model.feature_names)))
    pairs = sorted(zip(model.feature_names, model.weights.tolist()), key=lambda p: (-abs(p[1]), p[0]))
    return pairs[:k]


# ---------------------------------------------------------------- sequence model

PARAM_NAMES = ("W", "U", "b", "bhn", "wo", "bo")


@dataclass
class SequenceModel:
    """Single-layer gated recurrent cell + linear head on the last hidden state.

    W: (D, 3H), U: (H, 3H), b: (3H,), bhn: (H,), wo: (H,), bo: (1,).
    ``meta`` carries the encoder spec and feature standardization constants.
    """

    W: np.ndarray
    U: np.ndarray
    b: np.ndarray
    bhn: np.ndarray
    wo: np.ndarray
    bo: np.ndarray
    meta: dict = field(default_factory=dict)
    history: list[dict] = field(default_factory=list, repr=False)

    def __post_init__(self):
        D, H3 = self.W.shape
        H = H3 // 3
        expect = {"W": (D, 3 * H), "U": (H, 3 * H), "b": (3 * H,), "bhn": (H,), "wo": (H,), "bo": (1,)}
        for name, shape in expect.items():
            if getattr(self, name).shape != shape:
                raise ShapeError(f"{name} has shape {getattr(self, name).shape}, expected {shape}")

    @property
    def input_dim(self) -> int:
        return self.W.shape[0]

    @property
    def hidden(self) -> int:
        return self.U.shape[0]

    def params(self) -> dict[str, np.ndarray]:
        return {k: getattr(self, k) for k in PARAM_NAMES}

    def copy(self) -> "SequenceModel":
        return SequenceModel(**{k: v.copy() for k, v in self.params().items()}, meta=dict(self.meta))

    @classmethod
    def init(cls, input_dim: int, hidden: int = 128, seed: int = 0, meta: dict | None = None) -> "SequenceModel":
        rng = np.random.default_rng(seed)
        s = 1.0 / math.sqrt(hidden)
        u = lambda *shape: rng.uniform(-s, s, size=shape)  # noqa: E731
        return cls(u(input_dim, 3 * hidden), u(hidden, 3 * hidden), u(3 * hidden), u(hidden), u(hidden), u(1),
                   meta=dict(meta or {}))

    @classmethod
    def zeros(cls, input_dim: int, hidden: int) -> "SequenceModel":
        z = np.zeros
        return cls(z((input_dim, 3 * hidden)), z((hidden, 3 * hidden)), z(3 * hidden), z(hidden), z(hidden), z(1))

    def save(self, path: str | Path) -> None:
        payload = {
            "format": CHECKPOINT_FORMAT,
            "version": CHECKPOINT_VERSION,
            "kind": "sequence",
            "shapes": {k: list(v.shape) for k, v in self.params().items()},
            "params": {k: v.ravel().tolist() for k, v in self.params().items()},
            "meta": self.meta,
        }
        Path(path).write_text(json.dumps(payload, sort_keys=True))

    @classmethod
    def load(cls, path: str | Path) -> "SequenceModel":
        payload = json.loads(Path(path).read_text())
        if payload.get("format") != CHECKPOINT_FORMAT or payload.get("kind") != "sequence":
            raise ValueError(f"{path} is not a sequence-model checkpoint")
        if payload.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {payload.get('version')}")
        params = {k: np.asarray(payload["params"][k], dtype=float).reshape(payload["shapes"][k]) for k in PARAM_NAMES}
        return cls(**params, meta=payload.get("meta", {}))


def pad_batch(sequences: Sequence[np.ndarray], dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Right-pad sequences of (T_i, dim) rows into time-major (T, B, dim) plus mask (T, B)."""
    for s in sequences:
        if s.ndim != 2 or s.shape[1] != dim:
            raise ShapeError(f"post vectors must have dimension {dim}, got shape {s.shape}")
        if s.shape[0] == 0:
            raise ShapeError("a user sequence must contain at least one post")
    T = max(s.shape[0] for s in sequences)
    X = np.zeros((T, len(sequences), dim))
    mask = np.zeros((T, len(sequences)))
    for j, s in enumerate(sequences):
        X[: len(s), j] = s
        mask[: len(s), j] = 1.0
    return X, mask


def forward_batch(model: SequenceModel, X: np.ndarray, mask: np.ndarray):
    """Logits (B,) plus the forward cache."""
    cache = kernels.gru_forward(X, mask, model.W, model.U, model.b, model.bhn)
    h_last = cache[0][-1]
    return h_last @ model.wo + model.bo[0], cache


def forward_sequence(model: SequenceModel, posts) -> float:
    """Logit for one user's chronologically ordered per-post vectors."""
    seq = np.asarray(posts, dtype=float)
    if seq.ndim != 2 or seq.shape[1] != model.input_dim:
        raise ShapeError(f"expected post vectors of dimension {model.input_dim}, got shape {seq.shape}")
    if seq.shape[0] == 0:
        raise ShapeError("forward_sequence needs at least one post")
    X, mask = pad_batch([seq], model.input_dim)
    logits, _ = forward_batch(model, X, mask)
    return float(logits[0])


def backward_batch(model: SequenceModel, X, mask, cache, dlogits):
    """Parameter gradients and input gradients for upstream dL/dlogit of shape (B,)."""
    Hs, Z, R, Nc, HN = cache
    h_last = Hs[-1]
    g_last = np.outer(dlogits, model.wo)
    dW, dU, db, dbhn, dX = kernels.gru_backward(X, mask, model.W, model.U, Hs, Z, R, Nc, HN, g_last)
    grads = {"W": dW, "U": dU, "b": db, "bhn": dbhn, "wo": h_last.T @ dlogits, "bo": np.array([dlogits.sum()])}
    return grads, dX


def bce_with_logits(logits, y) -> float:
    # softplus(l) - y*l, stable for large |l|
    return float(np.mean(np.logaddexp(0.0, logits) - y * logits))


def sequence_loss_and_grads(model: SequenceModel, sequences: Sequence[np.ndarray], y) -> tuple[float, dict]:
    y = np.asarray(y, dtype=float)
    X, mask = pad_batch(sequences, model.input_dim)
    logits, cache = forward_batch(model, X, mask)
    loss = bce_with_logits(logits, y)
    dlogits = (0.5 * (1.0 + np.tanh(0.5 * logits)) - y) / len(y)
    grads, _ = backward_batch(model, X, mask, cache, dlogits)
    return loss, grads


def predict_logits(model: SequenceModel, sequences: Sequence[np.ndarray], batch_size: int = 256) -> np.ndarray:
    out = []
    for i in range(0, len(sequences), batch_size):
        X, mask = pad_batch(sequences[i : i + batch_size], model.input_dim)
        out.append(forward_batch(model, X, mask)[0])
    return np.concatenate(out) if out else np.zeros(0)


@dataclass(frozen=True)
class SequenceHyper:
    lr: float = 1e-3
    epochs: int = 30
    hidden: int = 128
    seed: int = 0
    grad_clip: float = 1.0
    batch_size: int = 32


class _Adam:
    def __init__(self, params: dict, lr: float, b1=0.9, b2=0.999, eps=1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, b1, b2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params: dict, grads: dict) -> None:
        self.t += 1
        c1 = 1.0 - self.b1**self.t
        c2 = 1.0 - self.b2**self.t
        for k, g in grads.items():
            self.m[k] = self.b1 * self.m[k] + (1 - self.b1) * g
            self.v[k] = self.b2 * self.v[k] + (1 - self.b2) * g * g
            params[k] -= self.lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + self.eps)


def clip_global_norm(grads: dict, max_norm: float) -> float:
    norm = math.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
    if max_norm > 0 and norm > max_norm:
        for g in grads.values():
            g *= max_norm / norm
    return norm


def fit_sequence_model(
    train_seqs: Sequence[np.ndarray],
    y_train,
    val_seqs: Sequence[np.ndarray],
    y_val,
    hyper: SequenceHyper = SequenceHyper(),
    meta: dict | None = None,
) -> SequenceModel:
    """Adam on mean BCE with global-norm clipping; keeps the epoch with best validation F1."""
    if not train_seqs or not val_seqs:
        raise ConfigError("training and validation splits must be non-empty")
    y_train = np.asarray(y_train, dtype=float)
    y_val = np.asarray(y_val, dtype=int)
    dim = train_seqs[0].shape[1]
    model = SequenceModel.init(dim, hyper.hidden, hyper.seed, meta)
    params = model.params()
    opt = _Adam(params, hyper.lr)
    rng = np.random.default_rng(hyper.seed + 1)
    best, best_f1 = model.copy(), -1.0
    step = 0
    for epoch in range(hyper.epochs):
        order = rng.permutation(len(train_seqs))
        losses = []
        for i in range(0, len(order), hyper.batch_size):
            idx = order[i : i + hyper.batch_size]
            loss, grads = sequence_loss_and_grads(model, [train_seqs[j] for j in idx], y_train[idx])
            step += 1
            if not math.isfinite(loss):
                raise TrainingError(f"non-finite training loss at step {step} (epoch {epoch})")
            clip_global_norm(grads, hyper.grad_clip)
            opt.step(params, grads)
            losses.append(loss)
        val_metrics = evaluate_scores(predict_logits(model, val_seqs), y_val)
        model.history.append({"epoch": epoch, "train_loss": float(np.mean(losses)), "val_f1": val_metrics.f1,
                              "val_accuracy": val_metrics.accuracy})
        log.debug("epoch %d loss %.4f val f1 %.4f", epoch, np.mean(losses), val_metrics.f1)
        if val_metrics.f1 > best_f1:
            best_f1, best = val_metrics.f1, model.copy()
    best.history = model.history
    best.meta["best_epoch"] = max(range(len(model.history)), key=lambda e: (model.history[e]["val_f1"], -e)) \
        if model.history else -1
    return best

