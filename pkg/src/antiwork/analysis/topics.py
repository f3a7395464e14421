"""LDA by collapsed Gibbs sampling, term saliency, and held-out perplexity."""

from __future__ import annotations

import logging
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Sequence

import numpy as np

from ..errors import ConfigError
from .. import kernels

log = logging.getLogger(__name__)


@lru_cache(maxsize=1)
def stopwords() -> frozenset[str]:
    text = resources.files("antiwork").joinpath("data/stopwords.txt").read_text(encoding="utf-8")
    return frozenset(text.split())


_TOKEN_RE = re.compile(r"[^\W\d_]+")


def topic_tokens(text: str, stop: frozenset[str] | None = None) -> list[str]:
    stop = stopwords() if stop is None else stop
    return [t for t in _TOKEN_RE.findall(text.lower()) if len(t) > 2 and t not in stop]


@dataclass
class TopicModel:
    K: int
    topic_word: np.ndarray  # (K, V) rows sum to 1
    doc_topic: np.ndarray  # (D, K) rows sum to 1
    vocab: list[str]
    seed: int = 0
    alpha: float = 0.0
    beta: float = 0.0
    topic_prior: np.ndarray | None = None  # P(t); uniform when None
    dropped_docs: int = 0
    iters: int = 0
    _word_index: dict = field(init=False, repr=False)

    def __post_init__(self):
        self._word_index = {w: i for i, w in enumerate(self.vocab)}

    def prior(self) -> np.ndarray:
        if self.topic_prior is None:
            return np.full(self.K, 1.0 / self.K)
        return np.asarray(self.topic_prior, dtype=float)

    def word_id(self, w: str) -> int | None:
        return self._word_index.get(w)

    def top_words(self, topic: int, n: int = 10) -> list[tuple[str, float]]:
        row = self.topic_word[topic]
        order = sorted(range(len(self.vocab)), key=lambda i: (-row[i], self.vocab[i]))[:n]
        return [(self.vocab[i], float(row[i])) for i in order]

    def to_dict(self, top_n: int = 10) -> dict:
        return {"K": self.K, "alpha": self.alpha, "beta": self.beta, "seed": self.seed, "iters": self.iters,
                "dropped_docs": self.dropped_docs, "topic_prior": self.prior().tolist(),
                "topics": [[{"term": w, "p": p} for w, p in self.top_words(k, top_n)] for k in range(self.K)]}


def _normalize_rows(m: np.ndarray) -> np.ndarray:
    return m / m.sum(axis=1, keepdims=True)


def _flatten(docs: Sequence[Sequence[int]]) -> tuple[np.ndarray, np.ndarray]:
    doc_ids = np.concatenate([np.full(len(d), i, dtype=np.int64) for i, d in enumerate(docs)])
    word_ids = np.concatenate([np.asarray(d, dtype=np.int64) for d in docs])
    return doc_ids, word_ids


def fit_lda(
    docs: Sequence[Sequence[str]],
    K: int = 10,
    alpha: float | None = None,
    beta: float = 0.01,
    iters: int = 200,
    seed: int = 0,
) -> TopicModel:
    """Collapsed Gibbs sampling with symmetric priors (alpha defaults to 50/K).

    Empty documents are dropped (count kept on the model); ``doc_topic`` rows
    follow the order of the remaining documents.
    """
    if K < 2:
        raise ConfigError("K must be at least 2")
    alpha = 50.0 / K if alpha is None else float(alpha)
    kept = [list(d) for d in docs if len(d)]
    dropped = len(docs) - len(kept)
    if dropped:
        log.warning("fit_lda: dropped %d empty documents", dropped)
    if not kept:
        raise ConfigError("fit_lda needs at least one non-empty document")
    vocab = sorted({w for d in kept for w in d})
    if len(vocab) < K:
        raise ConfigError(f"vocabulary size {len(vocab)} is smaller than K={K}")
    index = {w: i for i, w in enumerate(vocab)}
    doc_ids, word_ids = _flatten([[index[w] for w in d] for d in kept])
    D, V, N = len(kept), len(vocab), doc_ids.size

    rng = np.random.default_rng(seed)
    z = rng.integers(0, K, size=N).astype(np.int64)
    n_dk = np.zeros((D, K), dtype=np.int64)
    n_kw = np.zeros((K, V), dtype=np.int64)
    np.add.at(n_dk, (doc_ids, z), 1)
    np.add.at(n_kw, (z, word_ids), 1)
    n_k = n_kw.sum(axis=1)
    for _ in range(iters):
        kernels.lda_sweep(doc_ids, word_ids, z, n_dk, n_kw, n_k, rng.random(N), alpha, beta)

    phi = _normalize_rows(n_kw + beta)
    theta = _normalize_rows(n_dk + alpha)
    lengths = n_dk.sum(axis=1).astype(float)
    prior = (theta * lengths[:, None]).sum(axis=0) / lengths.sum()
    return TopicModel(K, phi, theta, vocab, seed, alpha, beta, prior, dropped, iters)


def salient_terms(model: TopicModel, corpus_counts: dict[str, int] | Counter, top_n: int = 10) -> list[tuple[str, float]]:
    """saliency(w) = P(w) * sum_t P(t|w) ln(P(t|w) / P(t)), descending, ties by term.

    Terms missing from the model vocabulary are ignored; ``top_n`` is clamped.
    """
    if top_n < 1:
        raise ConfigError("top_n must be at least 1")
    prior = model.prior()
    terms = [w for w in corpus_counts if model.word_id(w) is not None and corpus_counts[w] > 0]
    total = float(sum(corpus_counts[w] for w in terms))
    scored = []
    for w in terms:
        col = model.topic_word[:, model.word_id(w)] * prior
        s = col.sum()
        if s <= 0:
            scored.append((w, 0.0))
            continue
        post = col / s
        nz = post > 0
        dist = float(np.sum(post[nz] * np.log(post[nz] / prior[nz])))
        scored.append((w, corpus_counts[w] / total * dist))
    scored.sort(key=lambda p: (-p[1], p[0]))
    return scored[:top_n]


def fold_in(model: TopicModel, docs: Sequence[Sequence[str]], iters: int = 50, seed: int = 0) -> np.ndarray:
    """Doc-topic mixtures for unseen documents with topic-word fixed."""
    ids = [[model.word_id(w) for w in d if model.word_id(w) is not None] for d in docs]
    theta = np.full((len(docs), model.K), 1.0 / model.K)
    live = [i for i, d in enumerate(ids) if d]
    if not live:
        return theta
    doc_ids, word_ids = _flatten([ids[i] for i in live])
    rng = np.random.default_rng(seed)
    z = rng.integers(0, model.K, size=doc_ids.size).astype(np.int64)
    n_dk = np.zeros((len(live), model.K), dtype=np.int64)
    np.add.at(n_dk, (doc_ids, z), 1)
    phi = np.ascontiguousarray(model.topic_word)
    for _ in range(iters):
        kernels.lda_foldin_sweep(doc_ids, word_ids, z, n_dk, phi, rng.random(doc_ids.size), model.alpha)
    theta[live] = _normalize_rows(n_dk + model.alpha)
    return theta


def heldout_perplexity(model: TopicModel, docs: Sequence[Sequence[str]], iters: int = 50, seed: int = 0) -> float:
    """Document-completion perplexity: fold in on even-position tokens, score odd ones."""
    observed = [d[0::2] for d in docs]
    scored = [[w for w in d[1::2] if model.word_id(w) is not None] for d in docs]
    theta = fold_in(model, observed, iters, seed)
    ll, n = 0.0, 0
    for t, words in zip(theta, scored):
        for w in words:
            ll += math.log(float(t @ model.topic_word[:, model.word_id(w)]))
            n += 1
    return math.exp(-ll / n)


def unigram_perplexity(train_docs: Sequence[Sequence[str]], docs: Sequence[Sequence[str]], beta: float = 0.01) -> float:
    """Perplexity of a smoothed unigram model on the same scored tokens as :func:`heldout_perplexity`."""
    counts = Counter(w for d in train_docs for w in d)
    total = sum(counts.values())
    V = len(counts)
    ll, n = 0.0, 0
    for d in docs:
        for w in d[1::2]:
            if w in counts:
                ll += math.log((counts[w] + beta) / (total + V * beta))
                n += 1
    return math.exp(-ll / n)
