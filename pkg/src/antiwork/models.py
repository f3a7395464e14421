"""User-level predictors: featurization glue around the classifier primitives.

Five rows, cheapest first: random, TF-IDF linear, linguistic+engagement
linear, concatenated-history embedding + linear head, and per-post embedding
+ recurrent sequence model.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .classifier import (
    LinearModel,
    Metrics,
    RandomBaseline,
    SequenceHyper,
    SequenceModel,
    compute_metrics,
    evaluate_scores,
    fit_sequence_model,
    predict_logits,
    train_linear,
)
from .cohort import Label, LabeledUser
from .encoder import EncoderSpec, TokenEmbeddingSequence, make_encoder
from .features import (
    ENGAGEMENT_NAMES,
    LINGUISTIC_DIM,
    LINGUISTIC_NAMES,
    RuleTagger,
    Tagger,
    TfIdfVocab,
    engagement_features,
    fit_tfidf,
    linguistic_features,
    transform_many,
    user_document,
    user_linguistic,
)

MODEL_ROWS = (
    ("random", "Random (baseline)"),
    ("tfidf_svm", "SVM: TF-IDF"),
    ("ling_svm", "SVM: Linguistic Social Engagement Features"),
    ("concat_linear", "Concatenated embedding + linear head"),
    ("sequence", "Embedding + RNN"),
)


def labels_of(users: Sequence[LabeledUser]) -> np.ndarray:
    return np.array([1 if u.label is Label.ANTIWORK else 0 for u in users], dtype=int)


class PostFeaturizer:
    """Caches per-post token embeddings and raw linguistic counts."""

    def __init__(self, spec: EncoderSpec, tagger: Tagger | None = None, encoder=None):
        self.spec = spec
        self.encoder = encoder if encoder is not None else make_encoder(spec)
        self.tagger = tagger if tagger is not None else RuleTagger()
        self._cache: dict[tuple[str, str], tuple[TokenEmbeddingSequence, np.ndarray]] = {}

    def post_parts(self, post) -> tuple[TokenEmbeddingSequence, np.ndarray]:
        key = (post.id, post.text)
        hit = self._cache.get(key)
        if hit is None:
            hit = (self.encoder.encode(post.text), linguistic_features(post.text, self.tagger, post.id).to_array())
            self._cache[key] = hit
        return hit

    def raw_sequence(self, user: LabeledUser) -> tuple[np.ndarray, np.ndarray]:
        pooled, ling = zip(*((e.pooled, l) for e, l in map(self.post_parts, user.record.posts)))
        return np.stack(pooled), np.stack(ling)


def assemble(pooled: np.ndarray, ling: np.ndarray, ling_mean, ling_std) -> np.ndarray:
    return np.hstack([pooled, (ling - ling_mean) / ling_std])


# ---------------------------------------------------------------- sequence


class SequenceClassifier:
    name = "sequence"

    def __init__(self, model: SequenceModel, featurizer: PostFeaturizer):
        self.model = model
        self.featurizer = featurizer
        self.ling_mean = np.asarray(model.meta["ling_mean"])
        self.ling_std = np.asarray(model.meta["ling_std"])

    @classmethod
    def fit(cls, train: Sequence[LabeledUser], val: Sequence[LabeledUser], spec: EncoderSpec,
            hyper: SequenceHyper = SequenceHyper(), featurizer: PostFeaturizer | None = None) -> "SequenceClassifier":
        featurizer = featurizer or PostFeaturizer(spec)
        raw_train = [featurizer.raw_sequence(u) for u in train]
        all_ling = np.vstack([l for _, l in raw_train])
        mean = all_ling.mean(axis=0)
        std = all_ling.std(axis=0)
        std[std == 0] = 1.0
        seqs = [assemble(p, l, mean, std) for p, l in raw_train]
        val_seqs = [assemble(*featurizer.raw_sequence(u), mean, std) for u in val]
        meta = {"encoder": spec.to_dict(), "ling_mean": mean.tolist(), "ling_std": std.tolist(),
                "hyper": asdict(hyper)}
        model = fit_sequence_model(seqs, labels_of(train), val_seqs, labels_of(val), hyper, meta)
        return cls(model, featurizer)

    def sequence(self, user: LabeledUser) -> np.ndarray:
        return assemble(*self.featurizer.raw_sequence(user), self.ling_mean, self.ling_std)

    def decision(self, users: Sequence[LabeledUser]) -> np.ndarray:
        return predict_logits(self.model, [self.sequence(u) for u in users])

    def save(self, path: Path) -> None:
        self.model.save(path)

    @classmethod
    def load(cls, path: Path, featurizer: PostFeaturizer | None = None) -> "SequenceClassifier":
        model = SequenceModel.load(path)
        spec = EncoderSpec(**model.meta["encoder"])
        return cls(model, featurizer or PostFeaturizer(spec))


# ---------------------------------------------------------------- linear rows


@dataclass
class LinearHyper:
    l2: float = 1e-3
    epochs: int = 300
    seed: int = 0


def _save_linear(path: Path, kind: str, model: LinearModel, extra: dict) -> None:
    payload = {"format": "antiwork-linear", "version": 1, "kind": kind, "model": model.to_dict(), **extra}
    Path(path).write_text(json.dumps(payload, sort_keys=True))


def _load_linear(path: Path, kind: str) -> dict:
    payload = json.loads(Path(path).read_text())
    if payload.get("kind") != kind:
        raise ValueError(f"{path} holds a {payload.get('kind')!r} model, expected {kind!r}")
    return payload


class TfidfSVM:
    name = "tfidf_svm"

    def __init__(self, vocab: TfIdfVocab, model: LinearModel):
        self.vocab, self.model = vocab, model

    @classmethod
    def fit(cls, train: Sequence[LabeledUser], hyper: LinearHyper = LinearHyper()) -> "TfidfSVM":
        docs = [user_document(u.record) for u in train]
        vocab = fit_tfidf(docs)
        X = transform_many(docs, vocab)
        return cls(vocab, train_linear(X, labels_of(train), hyper.l2, hyper.epochs, hyper.seed, vocab.feature_names()))

    def decision(self, users: Sequence[LabeledUser]) -> np.ndarray:
        return self.model.decision_function(transform_many([user_document(u.record) for u in users], self.vocab))

    def save(self, path: Path) -> None:
        _save_linear(path, self.name, self.model, {"vocab": json.loads(self.vocab.to_json())})

    @classmethod
    def load(cls, path: Path) -> "TfidfSVM":
        p = _load_linear(path, cls.name)
        return cls(TfIdfVocab.from_json(json.dumps(p["vocab"])), LinearModel.from_dict(p["model"]))


LING_ENG_NAMES = [f"ling_{n}" for n in LINGUISTIC_NAMES] + [f"eng_{n}" for n in ENGAGEMENT_NAMES]


class LingEngSVM:
    name = "ling_svm"

    def __init__(self, model: LinearModel, tagger: Tagger | None = None):
        self.model = model
        self.tagger = tagger or RuleTagger()

    def features(self, users: Sequence[LabeledUser]) -> np.ndarray:
        return np.array([np.concatenate([user_linguistic(u.record, self.tagger),
                                         engagement_features(u.record).to_array()]) for u in users])

    @classmethod
    def fit(cls, train: Sequence[LabeledUser], hyper: LinearHyper = LinearHyper(), tagger: Tagger | None = None):
        inst = cls(LinearModel(np.zeros(len(LING_ENG_NAMES)), 0.0, LING_ENG_NAMES), tagger)
        X = inst.features(train)
        assert X.shape[1] == LINGUISTIC_DIM + len(ENGAGEMENT_NAMES)
        inst.model = train_linear(X, labels_of(train), hyper.l2, hyper.epochs, hyper.seed, LING_ENG_NAMES,
                                  standardize=True)
        return inst

    def decision(self, users: Sequence[LabeledUser]) -> np.ndarray:
        return self.model.decision_function(self.features(users))

    def save(self, path: Path) -> None:
        _save_linear(path, self.name, self.model, {})

    @classmethod
    def load(cls, path: Path) -> "LingEngSVM":
        return cls(LinearModel.from_dict(_load_linear(path, cls.name)["model"]))


class ConcatLinear:
    """Whole history joined into one text, encoded once (truncated at max_tokens)."""

    name = "concat_linear"

    def __init__(self, spec: EncoderSpec, model: LinearModel, encoder=None):
        self.spec, self.model = spec, model
        self.encoder = encoder if encoder is not None else make_encoder(spec)

    def features(self, users: Sequence[LabeledUser]) -> np.ndarray:
        return np.array([self.encoder.encode(user_document(u.record)).pooled for u in users])

    @classmethod
    def fit(cls, train: Sequence[LabeledUser], spec: EncoderSpec, hyper: LinearHyper = LinearHyper(), encoder=None):
        names = [f"emb_{i}" for i in range(spec.dim)]
        inst = cls(spec, LinearModel(np.zeros(spec.dim), 0.0, names), encoder)
        inst.model = train_linear(inst.features(train), labels_of(train), hyper.l2, hyper.epochs, hyper.seed, names,
                                  standardize=True)
        return inst

    def decision(self, users: Sequence[LabeledUser]) -> np.ndarray:
        return self.model.decision_function(self.features(users))

    def save(self, path: Path) -> None:
        _save_linear(path, self.name, self.model, {"encoder": self.spec.to_dict()})

    @classmethod
    def load(cls, path: Path) -> "ConcatLinear":
        p = _load_linear(path, cls.name)
        return cls(EncoderSpec(**p["encoder"]), LinearModel.from_dict(p["model"]))


# ---------------------------------------------------------------- ladder

CHECKPOINT_FILES = {
    "tfidf_svm": "tfidf_svm.json",
    "ling_svm": "ling_svm.json",
    "concat_linear": "concat_linear.json",
    "sequence": "sequence.json",
}


def train_ladder(train, val, spec: EncoderSpec, hyper: SequenceHyper, linear: LinearHyper) -> dict:
    featurizer = PostFeaturizer(spec)
    return {
        "tfidf_svm": TfidfSVM.fit(train, linear),
        "ling_svm": LingEngSVM.fit(train, linear, featurizer.tagger),
        "concat_linear": ConcatLinear.fit(train, spec, linear, featurizer.encoder),
        "sequence": SequenceClassifier.fit(train, val, spec, hyper, featurizer),
    }


def save_ladder(models: dict, directory: Path) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    for name, m in models.items():
        m.save(directory / CHECKPOINT_FILES[name])


def load_ladder(directory: Path) -> dict:
    loaders = {"tfidf_svm": TfidfSVM.load, "ling_svm": LingEngSVM.load, "concat_linear": ConcatLinear.load,
               "sequence": SequenceClassifier.load}
    return {name: loaders[name](directory / f) for name, f in CHECKPOINT_FILES.items() if (directory / f).exists()}


def evaluate_ladder(models: dict, users: Sequence[LabeledUser], random_seed: int = 0) -> dict[str, Metrics]:
    y = labels_of(users)
    out = {"random": compute_metrics(y, RandomBaseline(random_seed).predict(len(y)))}
    for name, _ in MODEL_ROWS[1:]:
        if name in models:
            out[name] = evaluate_scores(models[name].decision(users), y)
    return out


def metrics_table(results: dict[str, Metrics]) -> str:
    labels = dict(MODEL_ROWS)
    width = max(len(labels[n]) for n in results)
    lines = [f"{'Model':<{width}} | Accuracy | Precision | Recall | F1-score", "-" * (width + 44)]
    for name, _ in MODEL_ROWS:
        if name in results:
            m = results[name]
            lines.append(f"{labels[name]:<{width}} | {m.accuracy:8.2f} | {m.precision:9.2f} | {m.recall:6.2f} | {m.f1:8.2f}")
    return "\n".join(lines) + "\n"
