"""TF-IDF, linguistic-pattern and social-engagement features."""

from __future__ import annotations

import csv
import json
import math
import re
from collections import Counter
from dataclasses import astuple, dataclass, fields
from pathlib import Path
from typing import Iterable, NamedTuple, Protocol, Sequence

import numpy as np
import scipy.sparse as sp

from .corpus import Post, UserRecord


class FeatureExtractionError(RuntimeError):
    def __init__(self, post_id, cause):
        super().__init__(f"feature extraction failed for post {post_id!r}: {cause}")
        self.post_id = post_id


class BackendUnavailable(RuntimeError):
    """An optional backend (spaCy, transformers) is not installed or cannot load."""


# ---------------------------------------------------------------- tagging


class TaggedToken(NamedTuple):
    text: str
    pos: str  # universal POS tag
    person: int | None = None
    number: str | None = None  # "sing" | "plur"


class Tagger(Protocol):
    def tag(self, text: str) -> list[TaggedToken]: ...


_PRONOUNS = {
    # word: (person, number)
    "i": (1, "sing"), "me": (1, "sing"), "my": (1, "sing"), "mine": (1, "sing"), "myself": (1, "sing"),
    "we": (1, "plur"), "us": (1, "plur"), "our": (1, "plur"), "ours": (1, "plur"), "ourselves": (1, "plur"),
    "you": (2, "sing"), "your": (2, "sing"), "yours": (2, "sing"), "yourself": (2, "sing"),
    "yourselves": (2, "plur"), "y'all": (2, "plur"), "yall": (2, "plur"),
    "he": (3, "sing"), "him": (3, "sing"), "his": (3, "sing"), "himself": (3, "sing"),
    "she": (3, "sing"), "her": (3, "sing"), "hers": (3, "sing"), "herself": (3, "sing"),
    "it": (3, "sing"), "its": (3, "sing"), "itself": (3, "sing"),
    "they": (3, "plur"), "them": (3, "plur"), "their": (3, "plur"), "theirs": (3, "plur"),
    "themselves": (3, "plur"),
    "someone": (None, None), "anyone": (None, None), "everyone": (None, None), "nobody": (None, None),
    "something": (None, None), "anything": (None, None), "nothing": (None, None), "everything": (None, None),
    "this": (None, None), "that": (None, None), "these": (None, None), "those": (None, None),
    "who": (None, None), "what": (None, None),
}

_LEXICON_WORDS = {
    "NOUN": """job jobs work boss manager company office shift pay salary wage wages hour hours week
        day days interview interviews resume offer position role team coworker coworkers customer customers
        money rent time break overtime schedule manager's hr email recruiter recruiters application
        applications career life contract raise benefits vacation people problem url""",
    "VERB": """love hate want need get got make made go went quit work worked working apply applied
        hire hired fire fired pay paid ask asked tell told say said think thought feel felt know knew
        find found take took give gave call called start started leave left try tried help""",
    "AUX": "am is are was were be been being have has had do does did will would can could should may might must",
    "ADJ": """good bad great new old long late early tired happy sad toxic unpaid underpaid fair unfair
        hard easy full low high best worst entire entry remote awful nice""",
    "ADV": "not never always really very just still again also now then too often maybe actually so",
    "CCONJ": "and or but nor yet",
    "SCONJ": "because if when while although since",
    "DET": "the a an every each some any no all",
    "ADP": "to of in on for with at from by about after before until over into",
    "INTJ": "hi hey thanks lol ok yes please",
}

_WORD_TAGS: dict[str, str] = {}
for _tag, _words in _LEXICON_WORDS.items():
    for _w in _words.split():
        _WORD_TAGS.setdefault(_w, _tag)
for _w in _PRONOUNS:
    _WORD_TAGS[_w] = "PRON"

_TOKEN_RE = re.compile(r"[^\W_]+(?:'[^\W_]+)*|@|[^\w\s]|_+")


class RuleTagger:
    """Deterministic closed-lexicon tagger; words outside the lexicon are tagged X.

    ``@`` (the number placeholder) is NUM, any standalone symbol is PUNCT.
    """

    vocabulary = frozenset(_WORD_TAGS)

    def tag(self, text: str) -> list[TaggedToken]:
        out = []
        for tok in _TOKEN_RE.findall(text):
            low = tok.lower()
            if tok == "@" or low.isdigit():
                out.append(TaggedToken(tok, "NUM"))
            elif not any(c.isalnum() for c in tok):
                out.append(TaggedToken(tok, "PUNCT"))
            elif low in _PRONOUNS:
                person, number = _PRONOUNS[low]
                out.append(TaggedToken(tok, "PRON", person, number))
            else:
                out.append(TaggedToken(tok, _WORD_TAGS.get(low, "X")))
        return out


class SpacyTagger:
    """spaCy-backed provider; the model is loaded on first use."""

    def __init__(self, model: str = "en_core_web_sm"):
        self.model = model
        self._nlp = None

    def _load(self):
        if self._nlp is None:
            try:
                import spacy

                self._nlp = spacy.load(self.model, disable=["parser", "ner"])
            except (ImportError, OSError) as exc:
                raise BackendUnavailable(
                    f"spaCy model {self.model!r} unavailable ({exc}); use RuleTagger instead"
                ) from exc
        return self._nlp

    def tag(self, text: str) -> list[TaggedToken]:
        out = []
        for t in self._load()(text):
            person = t.morph.get("Person")
            number = t.morph.get("Number")
            out.append(
                TaggedToken(
                    t.text,
                    t.pos_,
                    int(person[0]) if person else None,
                    {"Sing": "sing", "Plur": "plur"}.get(number[0]) if number else None,
                )
            )
        return out


# ---------------------------------------------------------------- linguistic


@dataclass(frozen=True)
class LinguisticFeatures:
    first_sg: int = 0
    first_pl: int = 0
    second_sg: int = 0
    second_pl: int = 0
    third_sg: int = 0
    third_pl: int = 0
    noun: int = 0
    verb: int = 0
    adj: int = 0
    adv: int = 0
    cconj: int = 0
    num: int = 0
    punct: int = 0
    pron: int = 0
    n_tokens: int = 0

    def to_array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=float)


LINGUISTIC_NAMES = tuple(f.name for f in fields(LinguisticFeatures))
LINGUISTIC_DIM = 15
assert len(LINGUISTIC_NAMES) == LINGUISTIC_DIM

_POS_FIELDS = {"NOUN": "noun", "PROPN": "noun", "VERB": "verb", "ADJ": "adj", "ADV": "adv",
               "CCONJ": "cconj", "NUM": "num", "PUNCT": "punct", "PRON": "pron"}
_PERSON_FIELDS = {(1, "sing"): "first_sg", (1, "plur"): "first_pl", (2, "sing"): "second_sg",
                  (2, "plur"): "second_pl", (3, "sing"): "third_sg", (3, "plur"): "third_pl"}


def linguistic_features(text: str, tagger: Tagger, post_id: str | None = None) -> LinguisticFeatures:
    try:
        tagged = tagger.tag(text)
    except BackendUnavailable:
        raise
    except Exception as exc:
        raise FeatureExtractionError(post_id, exc) from exc
    counts: Counter = Counter()
    for tok in tagged:
        name = _POS_FIELDS.get(tok.pos)
        if name:
            counts[name] += 1
        if tok.pos == "PRON" and tok.person is not None:
            # English "you" carries no number; count it as singular
            counts[_PERSON_FIELDS[(tok.person, tok.number or "sing")]] += 1
    counts["n_tokens"] = len(tagged)
    return LinguisticFeatures(**counts)


def user_linguistic(record: UserRecord, tagger: Tagger) -> np.ndarray:
    """Mean of per-post linguistic vectors."""
    rows = [linguistic_features(p.text, tagger, p.id).to_array() for p in record.posts]
    return np.mean(rows, axis=0)


# ---------------------------------------------------------------- engagement


@dataclass(frozen=True)
class EngagementFeatures:
    score: float
    ups: float
    downs: float
    num_comments: float
    gilded: float
    pinned: float

    def __post_init__(self):
        if not 0.0 <= self.pinned <= 1.0:
            raise ValueError(f"pinned fraction out of range: {self.pinned}")

    def to_array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=float)


ENGAGEMENT_NAMES = tuple(f.name for f in fields(EngagementFeatures))
ENGAGEMENT_DIM = 6
assert len(ENGAGEMENT_NAMES) == ENGAGEMENT_DIM


def engagement_features(record: UserRecord) -> EngagementFeatures:
    posts: Sequence[Post] = record.posts
    n = len(posts)
    if n == 0:
        raise ValueError("engagement features need at least one post")
    return EngagementFeatures(
        score=math.fsum(p.score for p in posts) / n,
        ups=math.fsum(p.ups for p in posts) / n,
        downs=math.fsum(p.downs for p in posts) / n,
        num_comments=math.fsum(p.num_comments for p in posts) / n,
        gilded=math.fsum(p.gilded for p in posts) / n,
        pinned=sum(1 for p in posts if p.pinned) / n,
    )


# ---------------------------------------------------------------- tf-idf

_TFIDF_TOKEN_RE = re.compile(r"[^\W_]+")


def tfidf_tokens(doc: str) -> list[str]:
    return [t for t in _TFIDF_TOKEN_RE.findall(doc.lower()) if len(t) > 1]


def user_document(record: UserRecord) -> str:
    return "\n".join(p.text for p in record.posts)


@dataclass
class TfIdfVocab:
    terms: dict[str, tuple[int, int]]  # term -> (index, document frequency)
    n_docs: int

    def __len__(self):
        return len(self.terms)

    def idf(self) -> np.ndarray:
        out = np.empty(len(self.terms))
        for idx, df in self.terms.values():
            out[idx] = math.log((1 + self.n_docs) / (1 + df)) + 1.0
        return out

    def feature_names(self) -> list[str]:
        names = [""] * len(self.terms)
        for t, (idx, _) in self.terms.items():
            names[idx] = t
        return names

    def to_json(self) -> str:
        # tokens never contain "_", so the "n_docs" key cannot collide with a term
        payload = {t: [i, df] for t, (i, df) in self.terms.items()}
        payload["n_docs"] = self.n_docs
        return json.dumps(payload, sort_keys=True, ensure_ascii=False)

    @classmethod
    def from_json(cls, text: str) -> "TfIdfVocab":
        payload = json.loads(text)
        n_docs = payload.pop("n_docs")
        return cls({t: (int(v[0]), int(v[1])) for t, v in payload.items()}, int(n_docs))


def fit_tfidf(docs: Sequence[str]) -> TfIdfVocab:
    if not docs:
        raise ValueError("fit_tfidf needs at least one document")
    df: Counter = Counter()
    for d in docs:
        df.update(set(tfidf_tokens(d)))
    terms = {t: (i, df[t]) for i, t in enumerate(sorted(df))}
    return TfIdfVocab(terms, len(docs))


def transform_many(docs: Iterable[str], vocab: TfIdfVocab) -> sp.csr_matrix:
    """Row-wise L2-normalized tf*idf; out-of-vocabulary terms are dropped."""
    idf = vocab.idf()
    indptr, indices, data = [0], [], []
    for d in docs:
        counts = Counter(t for t in tfidf_tokens(d) if t in vocab.terms)
        cols = sorted(vocab.terms[t][0] for t in counts)
        byidx = {vocab.terms[t][0]: c for t, c in counts.items()}
        vals = np.array([byidx[c] * idf[c] for c in cols], dtype=float)
        norm = math.sqrt(float(vals @ vals)) if vals.size else 0.0
        if norm > 0:
            vals /= norm
        indices.extend(cols)
        data.extend(vals.tolist())
        indptr.append(len(indices))
    return sp.csr_matrix((data, indices, indptr), shape=(len(indptr) - 1, len(vocab)))


def transform(doc: str, vocab: TfIdfVocab) -> sp.csr_matrix:
    return transform_many([doc], vocab)


# ---------------------------------------------------------------- export


def write_feature_csv(path: str | Path, names: Sequence[str], rows, ids: Sequence[str] | None = None) -> None:
    rows = np.asarray(rows, dtype=float)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow((["id"] if ids is not None else []) + list(names))
        for i, row in enumerate(rows):
            w.writerow(([ids[i]] if ids is not None else []) + [repr(float(v)) for v in row])
