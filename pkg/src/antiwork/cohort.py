"""Temporal subreddit-proxy labeling, Gaussian-weighted neutral sampling, stratified split."""

from __future__ import annotations

import enum
import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError
from .corpus import UserRecord


class Label(str, enum.Enum):
    ANTIWORK = "antiwork"
    NEUTRAL = "neutral"
    EXCLUDED = "excluded"


DEFAULT_NEUTRAL = frozenset({"recruiting", "recruitinghell", "work", "jobs"})


@dataclass(frozen=True)
class LabelSchema:
    target_subreddit: str = "antiwork"
    neutral_subreddits: frozenset[str] = DEFAULT_NEUTRAL

    def __post_init__(self):
        object.__setattr__(self, "target_subreddit", self.target_subreddit.lower())
        object.__setattr__(self, "neutral_subreddits", frozenset(s.lower() for s in self.neutral_subreddits))
        if not self.target_subreddit or not self.neutral_subreddits:
            raise ConfigError("schema needs a target subreddit and at least one neutral subreddit")
        if self.target_subreddit in self.neutral_subreddits:
            raise ConfigError(f"target {self.target_subreddit!r} is also listed as neutral")

    @property
    def subreddits(self) -> frozenset[str]:
        return self.neutral_subreddits | {self.target_subreddit}

    def to_dict(self) -> dict:
        return {"target_subreddit": self.target_subreddit, "neutral_subreddits": sorted(self.neutral_subreddits)}


@dataclass(frozen=True)
class LabeledUser:
    record: UserRecord
    label: Label

    @property
    def author(self) -> str:
        return self.record.author

    def to_dict(self) -> dict:
        return {"label": self.label.value, **self.record.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "LabeledUser":
        return cls(UserRecord.from_dict(d), Label(d["label"]))


@dataclass(frozen=True)
class SamplingConfig:
    mu: float
    sigma: float
    n_samples: int
    seed: int = 0

    def __post_init__(self):
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise ConfigError(f"sigma must be a positive finite number, got {self.sigma}")
        if self.n_samples < 1:
            raise ConfigError(f"n_samples must be positive, got {self.n_samples}")


@dataclass
class CohortDataset:
    train: list[LabeledUser]
    val: list[LabeledUser]
    split_ratio: float
    seed: int
    extra: dict = field(default_factory=dict)

    def counts(self) -> dict:
        out = {}
        for name, part in (("train", self.train), ("val", self.val)):
            c = defaultdict(int)
            for u in part:
                c[u.label.value] += 1
            out[name] = dict(sorted(c.items()))
        return out


# ---------------------------------------------------------------- labeling


def label_user(record: UserRecord, schema: LabelSchema = LabelSchema()) -> Label:
    """Antiwork iff some target-subreddit post is strictly later than some neutral
    post; neutral iff every post is in a neutral subreddit; excluded otherwise."""
    first_neutral = math.inf
    last_target = -math.inf
    all_neutral = True
    for p in record.posts:
        if p.subreddit in schema.neutral_subreddits:
            first_neutral = min(first_neutral, p.created_utc)
        else:
            all_neutral = False
            if p.subreddit == schema.target_subreddit:
                last_target = max(last_target, p.created_utc)
    if last_target > first_neutral:
        return Label.ANTIWORK
    if all_neutral:
        return Label.NEUTRAL
    return Label.EXCLUDED


def label_users(records: Iterable[UserRecord], schema: LabelSchema = LabelSchema()) -> list[LabeledUser]:
    return [LabeledUser(r, label_user(r, schema)) for r in records]


def label_counts(users: Iterable[LabeledUser]) -> dict[str, int]:
    counts = {lab.value: 0 for lab in Label}
    for u in users:
        counts[u.label.value] += 1
    return counts


# ---------------------------------------------------------------- sampling


def post_count_stats(users: Sequence[LabeledUser]) -> tuple[float, float]:
    """(mean, population std) of post counts."""
    n = np.array([len(u.record) for u in users], dtype=float)
    if n.size == 0:
        raise ConfigError("cannot estimate post-count statistics from an empty class")
    return float(n.mean()), float(n.std())


def gaussian_log_weights(post_counts, mu: float, sigma: float) -> np.ndarray:
    n = np.asarray(post_counts, dtype=float)
    return -((n - mu) ** 2) / (2.0 * sigma**2)


def sample_neutral(pool: Sequence[LabeledUser], cfg: SamplingConfig) -> list[LabeledUser]:
    """Draw ``cfg.n_samples`` users without replacement, each draw proportional to
    exp(-(n_u - mu)^2 / (2 sigma^2)) over the users still in the pool.

    Uses Gumbel top-k, which has exactly the distribution of successive
    renormalized draws and never underflows.  Returned in draw order.
    """
    if cfg.n_samples > len(pool):
        raise ConfigError(f"n_samples={cfg.n_samples} exceeds pool size {len(pool)}")
    logw = gaussian_log_weights([len(u.record) for u in pool], cfg.mu, cfg.sigma)
    rng = np.random.default_rng(cfg.seed)
    keys = logw + rng.gumbel(size=len(pool))
    # stable sort on -keys; ties (probability zero) resolve by pool position
    order = np.argsort(-keys, kind="stable")[: cfg.n_samples]
    return [pool[i] for i in order]


# ---------------------------------------------------------------- split


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def split(users: Sequence[LabeledUser], ratio: float, seed: int) -> CohortDataset:
    """Stratified shuffle split; per-class train size round_half_up(ratio * n)
    clamped so both sides keep at least one user."""
    if not 0.0 < ratio < 1.0:
        raise ConfigError(f"split ratio must be in (0, 1), got {ratio}")
    by_label: dict[Label, list[LabeledUser]] = defaultdict(list)
    for u in users:
        by_label[u.label].append(u)
    rng = np.random.default_rng(seed)
    train, val = [], []
    for label in sorted(by_label, key=lambda lab: lab.value):
        group = by_label[label]
        if len(group) < 2:
            raise ConfigError(f"class {label.value!r} has {len(group)} user(s); need at least 2 to split")
        perm = rng.permutation(len(group))
        n_train = min(max(_round_half_up(ratio * len(group)), 1), len(group) - 1)
        train.extend(group[i] for i in perm[:n_train])
        val.extend(group[i] for i in perm[n_train:])
    return CohortDataset(train=train, val=val, split_ratio=ratio, seed=seed)


# ---------------------------------------------------------------- io


def write_labeled(users: Iterable[LabeledUser], path: str | Path) -> int:
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for u in users:
            fh.write(json.dumps(u.to_dict(), ensure_ascii=False, sort_keys=True) + "\n")
            n += 1
    return n


def read_labeled(path: str | Path) -> list[LabeledUser]:
    with open(path, encoding="utf-8") as fh:
        return [LabeledUser.from_dict(json.loads(line)) for line in fh if line.strip()]


def save_dataset(ds: CohortDataset, directory: str | Path, manifest: dict | None = None) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_labeled(ds.train, directory / "train.jsonl")
    write_labeled(ds.val, directory / "val.jsonl")
    meta = {"split_ratio": ds.split_ratio, "seed": ds.seed, "counts": ds.counts(), **ds.extra}
    if manifest:
        meta.update(manifest)
    (directory / "manifest.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def load_dataset(directory: str | Path) -> CohortDataset:
    directory = Path(directory)
    meta = json.loads((directory / "manifest.json").read_text())
    return CohortDataset(
        train=read_labeled(directory / "train.jsonl"),
        val=read_labeled(directory / "val.jsonl"),
        split_ratio=meta.get("split_ratio", 0.75),
        seed=meta.get("seed", 0),
        extra={k: v for k, v in meta.items() if k not in ("split_ratio", "seed", "counts")},
    )
