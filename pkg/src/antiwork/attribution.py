"""Integrated-gradients word attribution for the sequence model."""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .classifier import backward_batch, forward_batch, pad_batch
from .cohort import LabeledUser


class BackendCapabilityError(RuntimeError):
    """The encoder cannot expose per-token vectors to differentiate through."""


@dataclass(frozen=True)
class AttributionResult:
    post_id: str
    tokens: list[str]
    scores: list[float]
    convergence_delta: float
    steps: int
    logit: float = 0.0
    baseline_logit: float = 0.0
    normalized: bool = False
    all_zero: bool = False

    def __post_init__(self):
        if len(self.tokens) != len(self.scores):
            raise ValueError(f"{len(self.tokens)} tokens but {len(self.scores)} scores")
        if self.convergence_delta < 0:
            raise ValueError("convergence_delta must be non-negative")

    def to_dict(self) -> dict:
        return {"post_id": self.post_id, "tokens": list(self.tokens), "scores": list(self.scores),
                "delta": self.convergence_delta, "steps": self.steps, "logit": self.logit,
                "baseline_logit": self.baseline_logit, "normalized": self.normalized, "all_zero": self.all_zero}

    @classmethod
    def from_dict(cls, d: dict) -> "AttributionResult":
        return cls(d["post_id"], list(d["tokens"]), [float(s) for s in d["scores"]], float(d["delta"]),
                   int(d["steps"]), float(d.get("logit", 0.0)), float(d.get("baseline_logit", 0.0)),
                   bool(d.get("normalized", False)), bool(d.get("all_zero", False)))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, sort_keys=True)


def riemann_integrated_gradients(
    grad_fn: Callable[[np.ndarray], np.ndarray],
    x: np.ndarray,
    baseline: np.ndarray | None = None,
    steps: int = 50,
) -> np.ndarray:
    """(x - baseline) * mean_k grad F(baseline + k/steps (x - baseline)), k = 1..steps.

    ``grad_fn`` receives all interpolation points stacked on a new leading axis
    and returns the gradients in the same layout.
    """
    if steps < 1:
        raise ValueError("steps must be at least 1")
    x = np.asarray(x, dtype=float)
    baseline = np.zeros_like(x) if baseline is None else np.asarray(baseline, dtype=float)
    alphas = np.arange(1, steps + 1, dtype=float) / steps
    diff = x - baseline
    points = baseline[None] + alphas.reshape((-1,) + (1,) * x.ndim) * diff[None]
    grads = np.asarray(grad_fn(points))
    return diff * grads.mean(axis=0)


def merge_subwords(tokens: Sequence[str], scores: Sequence[float], scheme: str = "none"):
    """Sum scores of subword pieces into whole words.

    ``wordpiece``: a piece starting with ``##`` continues the previous word.
    ``bpe``: a piece starting with ``Ġ`` (or the first piece) starts a word,
    all others continue it.
    """
    if scheme == "none":
        return list(tokens), [float(s) for s in scores]
    words: list[str] = []
    merged: list[float] = []
    for i, (tok, s) in enumerate(zip(tokens, scores)):
        if scheme == "wordpiece":
            cont = tok.startswith("##") and bool(words)
            piece = tok[2:] if cont else tok
        elif scheme == "bpe":
            cont = i > 0 and not tok.startswith("Ġ") and bool(words)
            piece = tok[1:] if tok.startswith("Ġ") else tok
        else:
            raise ValueError(f"unknown subword scheme {scheme!r}")
        if cont:
            words[-1] += piece
            merged[-1] += float(s)
        else:
            words.append(piece)
            merged.append(float(s))
    return words, merged


def _baseline_matrix(encoder, vectors: np.ndarray, kind: str) -> np.ndarray:
    if kind == "zero":
        return np.zeros_like(vectors)
    if kind == "pad":
        if not hasattr(encoder, "table_row"):
            raise BackendCapabilityError("padding-token baseline is only available on the hashing backend")
        row = encoder.table_row(encoder.row_index("<pad>"))
        return np.tile(row, (len(vectors), 1))
    raise ValueError(f"unknown baseline {kind!r}")


def integrated_gradients(
    classifier,
    user: LabeledUser,
    target_index: int,
    steps: int = 50,
    baseline: str = "zero",
) -> AttributionResult:
    """Attribute the user-level logit to the tokens of one post.

    Only the target post's token-embedding matrix moves along the path; every
    other post and the target's linguistic features stay at their real values.
    """
    posts = user.record.posts
    if not 0 <= target_index < len(posts):
        raise IndexError(f"target_index {target_index} out of range for {len(posts)} posts")
    featurizer = classifier.featurizer
    encoder = featurizer.encoder
    if not hasattr(encoder, "encode"):
        raise BackendCapabilityError("encoder does not expose token vectors")
    model = classifier.model
    seq = classifier.sequence(user)
    emb, _ = featurizer.post_parts(posts[target_index])
    V = np.asarray(emb.vectors, dtype=float)
    n_tok, E = V.shape[0], featurizer.encoder.dim
    X1, mask1 = pad_batch([seq], model.input_dim)

    def logits_at(token_mats: np.ndarray) -> tuple[np.ndarray, tuple]:
        B = token_mats.shape[0]
        X = np.repeat(X1, B, axis=1)
        mask = np.repeat(mask1, B, axis=1)
        X[target_index, :, :E] = token_mats.mean(axis=1) if n_tok else 0.0
        logits, cache = forward_batch(model, X, mask)
        return logits, (X, mask, cache)

    def grad_fn(points: np.ndarray) -> np.ndarray:
        _, (X, mask, cache) = logits_at(points)
        _, dX = backward_batch(model, X, mask, cache, np.ones(points.shape[0]))
        # pooled = mean of rows, so each row gets 1/n of the pooled gradient
        return np.repeat(dX[target_index, :, None, :E] / n_tok, n_tok, axis=1)

    base = _baseline_matrix(encoder, V, baseline)
    ends, _ = logits_at(np.stack([V, base]))
    f_x, f_base = float(ends[0]), float(ends[1])
    if n_tok:
        cell = riemann_integrated_gradients(grad_fn, V, base, steps)
        token_scores = cell.sum(axis=1)
    else:
        token_scores = np.zeros(0)
    delta = abs(float(token_scores.sum()) - (f_x - f_base))
    words, scores = merge_subwords(emb.tokens, token_scores.tolist(), getattr(encoder, "subword_scheme", "none"))
    return AttributionResult(posts[target_index].id, words, scores, delta, steps, f_x, f_base)


def attribute_user(classifier, user: LabeledUser, steps: int = 50, baseline: str = "zero") -> list[AttributionResult]:
    return [integrated_gradients(classifier, user, i, steps, baseline) for i in range(len(user.record.posts))]


def normalize_scores(result: AttributionResult) -> AttributionResult:
    """Divide by max |score|; all-zero results come back unchanged with ``all_zero`` set."""
    peak = max((abs(s) for s in result.scores), default=0.0)
    if peak == 0.0:
        return replace(result, all_zero=True)
    return replace(result, scores=[s / peak for s in result.scores], normalized=True)
