"""Synthetic dump generator with a planted, controllable signal.

Two variants:

``lexical``
    Antiwork users (neutral posts first, then r/antiwork posts) write complaint
    vocabulary in their later posts; neutral users rarely do.
``order``
    Every user writes exactly one complaint post from the same distribution.
    Antiwork users write it last (in r/antiwork); neutral users write it first
    (in a neutral subreddit).  Bag-of-words statistics are identical across
    classes, so only post order separates them.

Output is raw dump records (submissions and comments) so generated corpora
enter the pipeline at ``ingest`` exactly like real data.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError

NEUTRAL_SUBS = ("recruiting", "recruitinghell", "work", "jobs")
TARGET_SUB = "antiwork"

PRONOUNS = "i me my we our you your he she they them it this".split()
VERBS = "love want need get make go work apply hire call start leave try help think feel know find take give ask tell".split()
AUX = "am is are was have had do did will would can could should".split()
NOUNS = ("job interview resume offer position role team manager schedule application recruiter career "
         "hours week salary benefits office shift contract email company customer people time day").split()
ADJS = "good new old long late early happy great full remote entry nice hard easy".split()
ADVS = "really very just still again also now then often maybe actually".split()
FUNC = "the a an to of in on for with at from about and but or because if".split()
COMPLAINT = ("exploited unpaid burnout toxic underpaid quit overworked hate unfair awful "
             "miserable exhausted greedy disrespected").split()
EXTRAS = ("https://example.com/jobs", "www.careers.example.org", "$15", "3.5", "2,000", "\U0001F600", "\U0001F620")


@dataclass(frozen=True)
class SynthConfig:
    n_users: int = 2000
    seed: int = 0
    variant: str = "lexical"
    antiwork_frac: float = 0.42
    excluded_frac: float = 0.06
    neutral_complaint_rate: float = 0.01
    start_utc: int = 1_420_070_400  # 2015-01-01

    def __post_init__(self):
        if self.variant not in ("lexical", "order"):
            raise ConfigError(f"unknown synth variant {self.variant!r}")
        if self.n_users < 4:
            raise ConfigError("n_users must be at least 4")


def _sentence(rng: np.random.Generator, complaint: int = 0) -> list[str]:
    words = [rng.choice(PRONOUNS), rng.choice(AUX if rng.random() < 0.3 else VERBS)]
    for _ in range(int(rng.integers(3, 9))):
        pool = (FUNC, NOUNS, ADJS, ADVS, VERBS)[int(rng.choice(5, p=[0.35, 0.3, 0.15, 0.1, 0.1]))]
        words.append(str(rng.choice(pool)))
    for _ in range(complaint):
        words.insert(int(rng.integers(1, len(words) + 1)), str(rng.choice(COMPLAINT)))
    if rng.random() < 0.08:
        words.insert(int(rng.integers(0, len(words) + 1)), str(rng.choice(EXTRAS)))
    return [str(w) for w in words]


def _text(rng: np.random.Generator, complaint_words: int = 0) -> str:
    n_sent = int(rng.integers(1, 4))
    per = [0] * n_sent
    for _ in range(complaint_words):
        per[int(rng.integers(0, n_sent))] += 1
    sents = []
    for c in per:
        words = _sentence(rng, c)
        words[0] = words[0].capitalize()
        sents.append(" ".join(words) + str(rng.choice([".", ".", "!", "?"])))
    return " ".join(sents)


def _post_count(rng: np.random.Generator, minimum: int) -> int:
    return minimum + int(rng.geometric(0.2)) - 1


def _record(rng, author, sub, ts, uid, complaint_words):
    base = {
        "id": uid,
        "author": author,
        "subreddit": sub if rng.random() < 0.8 else sub.capitalize(),
        "created_utc": int(ts),
        "score": int(rng.poisson(10)),
        "ups": int(rng.poisson(12)),
        "downs": int(rng.poisson(2)),
        "gilded": int(rng.random() < 0.02),
    }
    if rng.random() < 0.6:
        base.update(kind="submission", title=_text(rng, 0)[:80], selftext=_text(rng, complaint_words),
                    num_comments=int(rng.poisson(5)), pinned=bool(rng.random() < 0.01))
    else:
        base.update(kind="comment", body=_text(rng, complaint_words))
    return base


def _user_plan(rng, cfg: SynthConfig, role: str) -> list[tuple[str, int]]:
    """(subreddit, complaint word count) per post in chronological order."""
    if role == "excluded":
        return [(TARGET_SUB, int(rng.integers(0, 3))) for _ in range(_post_count(rng, 1))]
    n = _post_count(rng, 2)
    neutral = lambda: str(rng.choice(NEUTRAL_SUBS))  # noqa: E731
    if cfg.variant == "order":
        plan = [(neutral(), 0) for _ in range(n)]
        if role == "antiwork":
            plan[-1] = (TARGET_SUB, 3)
        else:
            plan[0] = (neutral(), 3)
        return plan
    if role == "antiwork":
        n_target = min(max(int(round(n * rng.uniform(0.3, 0.7))), 1), n - 1)
        return [(neutral(), 0) for _ in range(n - n_target)] + [(TARGET_SUB, int(rng.integers(3, 6)))
                                                                 for _ in range(n_target)]
    return [(neutral(), 2 if rng.random() < cfg.neutral_complaint_rate else 0) for _ in range(n)]


def generate(cfg: SynthConfig) -> tuple[list[dict], list[dict], dict]:
    """Return (submission records, comment records, truth) where truth maps author to role."""
    rng = np.random.default_rng(cfg.seed)
    n_anti = int(round(cfg.n_users * cfg.antiwork_frac))
    n_excl = int(round(cfg.n_users * cfg.excluded_frac))
    roles = ["antiwork"] * n_anti + ["excluded"] * n_excl + ["neutral"] * (cfg.n_users - n_anti - n_excl)
    roles = [roles[i] for i in rng.permutation(len(roles))]
    subs, comments, truth = [], [], {}
    for i, role in enumerate(roles):
        author = f"user{i:05d}"
        truth[author] = role
        ts = cfg.start_utc + int(rng.integers(0, 86400 * 365))
        for j, (sub, cw) in enumerate(_user_plan(rng, cfg, role)):
            ts += int(rng.integers(3600, 86400 * 30))
            rec = _record(rng, author, sub, ts, f"{i:05d}{j:03d}", cw)
            (subs if rec.pop("kind") == "submission" else comments).append(rec)
        if i % 50 == 0:
            # placeholder and junk records exercising the parser's reject paths
            subs.append({"id": f"del{i}", "author": "[deleted]", "subreddit": "jobs", "title": "x",
                         "selftext": "[removed]", "created_utc": cfg.start_utc + i})
            subs.append({"id": f"nos{i}", "author": f"junk{i}", "subreddit": "work", "title": "no body",
                         "created_utc": cfg.start_utc + i})
            comments.append({"id": f"off{i}", "author": f"garden{i}", "subreddit": "gardening",
                             "body": "tomatoes", "created_utc": cfg.start_utc + i})
    return subs, comments, truth


def write_corpus(cfg: SynthConfig, directory: str | Path) -> dict:
    """Write ``submissions.jsonl``, ``comments.jsonl`` and ``truth.json``; return digests."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    subs, comments, truth = generate(cfg)
    digests = {}
    for name, rows in (("submissions.jsonl", subs), ("comments.jsonl", comments)):
        lines = [json.dumps(r, sort_keys=True, ensure_ascii=False) for r in rows]
        if name == "comments.jsonl":
            lines.insert(len(lines) // 2, '{"truncated": ')  # one malformed line
        data = ("\n".join(lines) + "\n").encode("utf-8")
        (directory / name).write_bytes(data)
        digests[name] = hashlib.sha256(data).hexdigest()
    truth_bytes = (json.dumps(truth, sort_keys=True) + "\n").encode()
    (directory / "truth.json").write_bytes(truth_bytes)
    digests["truth.json"] = hashlib.sha256(truth_bytes).hexdigest()
    return digests
