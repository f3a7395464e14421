"""Text-to-vector encoders.

Two backends share one contract: ``encode(text)`` returns per-token vectors and
their mean.  The hashing backend needs no model download and is what tests and
the synthetic pipeline use; the transformer backend wraps a frozen Hugging Face
encoder when one is installed locally.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np

from .errors import ConfigError
from .features import BackendUnavailable

TABLE_ROWS = 2**16


@dataclass(frozen=True)
class EncoderSpec:
    backend: str = "hashing"
    dim: int = 64
    max_tokens: int = 512
    seed: int = 0
    model_name: str = "roberta-base"

    def __post_init__(self):
        if self.backend not in ("hashing", "transformer"):
            raise ConfigError(f"unknown encoder backend {self.backend!r}")
        if self.dim <= 0 or self.max_tokens <= 0:
            raise ConfigError("encoder dim and max_tokens must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class TokenEmbeddingSequence:
    tokens: list[str]
    vectors: np.ndarray  # (n_tokens, dim)
    pooled: np.ndarray  # (dim,)


def mean_pool(vectors: np.ndarray, dim: int) -> np.ndarray:
    if len(vectors) == 0:
        return np.zeros(dim)
    return vectors.mean(axis=0)


# ---------------------------------------------------------------- hashing

_WORD_RE = re.compile(r"[\w@']+|[^\w\s]")


def hash_tokens(text: str) -> list[str]:
    return _WORD_RE.findall(text.lower())


def stable_hash64(token: str) -> int:
    return int.from_bytes(hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest(), "little")


class HashingEncoder:
    """Token t maps to row ``stable_hash64(t) % 2**16`` of a seeded N(0, 1) table.

    Rows are generated on demand from (seed, row) so large ``dim`` stays cheap;
    the table is still a fixed function of the seed.
    """

    subword_scheme = "none"

    def __init__(self, spec: EncoderSpec):
        self.spec = spec
        self.dim = spec.dim
        self._row = lru_cache(maxsize=TABLE_ROWS)(self._make_row)

    def _make_row(self, index: int) -> np.ndarray:
        row = np.random.default_rng([self.spec.seed, index]).standard_normal(self.dim)
        row.setflags(write=False)
        return row

    def row_index(self, token: str) -> int:
        return stable_hash64(token) % TABLE_ROWS

    def table_row(self, index: int) -> np.ndarray:
        return self._row(index)

    def encode(self, text: str) -> TokenEmbeddingSequence:
        tokens = hash_tokens(text)[: self.spec.max_tokens]
        if tokens:
            vectors = np.stack([self._row(self.row_index(t)) for t in tokens])
        else:
            vectors = np.zeros((0, self.dim))
        return TokenEmbeddingSequence(tokens, vectors, mean_pool(vectors, self.dim))


# ---------------------------------------------------------------- transformer


class TransformerEncoder:
    """Frozen pretrained encoder; token vectors are the last hidden layer."""

    def __init__(self, spec: EncoderSpec, local_files_only: bool = True):
        try:
            import torch
            from transformers import AutoModel, AutoTokenizer

            self._tok = AutoTokenizer.from_pretrained(spec.model_name, local_files_only=local_files_only)
            self._model = AutoModel.from_pretrained(spec.model_name, local_files_only=local_files_only).eval()
        except Exception as exc:  # ImportError, OSError from missing weights, ...
            raise BackendUnavailable(
                f"transformer backend {spec.model_name!r} unavailable ({type(exc).__name__}: {exc}); "
                "set encoder.backend to 'hashing' to run offline"
            ) from exc
        self._torch = torch
        self.spec = spec
        self.dim = int(self._model.config.hidden_size)
        if self.dim != spec.dim:
            raise ValueError(f"encoder.dim={spec.dim} but {spec.model_name} has hidden size {self.dim}")
        sample = self._tok.tokenize(" hello worldwide")
        self.subword_scheme = "bpe" if any(t.startswith("Ġ") for t in sample) else "wordpiece"

    def encode(self, text: str) -> TokenEmbeddingSequence:
        enc = self._tok(text, truncation=True, max_length=self.spec.max_tokens, return_tensors="pt",
                        return_special_tokens_mask=True)
        special = enc.pop("special_tokens_mask")[0].numpy().astype(bool)
        with self._torch.no_grad():
            hidden = self._model(**enc).last_hidden_state[0].numpy().astype(float)
        ids = enc["input_ids"][0].tolist()
        keep = ~special
        tokens = [t for t, k in zip(self._tok.convert_ids_to_tokens(ids), keep) if k]
        vectors = hidden[keep]
        return TokenEmbeddingSequence(tokens, vectors, mean_pool(vectors, self.dim))


def make_encoder(spec: EncoderSpec):
    if spec.backend == "hashing":
        return HashingEncoder(spec)
    return TransformerEncoder(spec)
