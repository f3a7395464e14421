import os
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from antiwork.cohort import Label, LabeledUser
from antiwork.corpus import Post, UserRecord

FIXTURES = Path(__file__).parent / "fixtures"

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def make_post(pid="p", author="a", subreddit="jobs", t=1, title="", body="text", kind="submission", **kw):
    return Post(id=str(pid), author=author, subreddit=subreddit, created_utc=int(t), title=title, body=body,
                kind=kind, **kw)


def make_user(author, subs_times, texts=None):
    """subs_times: [(subreddit, created_utc), ...]"""
    texts = texts or ["some text"] * len(subs_times)
    posts = tuple(make_post(f"{author}{i:03d}", author, s, t, body=x)
                  for i, ((s, t), x) in enumerate(zip(subs_times, texts)))
    return UserRecord(author, posts)


def labeled(author, label, n_posts=2, texts=None):
    sub = {"antiwork": "antiwork", "neutral": "jobs"}[label]
    rec = make_user(author, [("jobs", 1)] + [(sub, i + 2) for i in range(n_posts - 1)], texts)
    return LabeledUser(rec, Label(label))


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def hashing_classifier(dim=8, hidden=6, seed=0, scale=1.0):
    """Randomly initialised sequence classifier over the hashing encoder (no training)."""
    from antiwork.classifier import SequenceModel
    from antiwork.encoder import EncoderSpec
    from antiwork.features import LINGUISTIC_DIM
    from antiwork.models import PostFeaturizer, SequenceClassifier

    spec = EncoderSpec(dim=dim, seed=seed)
    meta = {"encoder": spec.to_dict(), "ling_mean": [0.0] * LINGUISTIC_DIM, "ling_std": [5.0] * LINGUISTIC_DIM}
    model = SequenceModel.init(dim + LINGUISTIC_DIM, hidden, seed=seed, meta=meta)
    for v in model.params().values():
        v *= scale
    return SequenceClassifier(model, PostFeaturizer(spec))


WORDS = ("i hate my job the boss is toxic we love remote work pay was late again quit today "
         "overtime unpaid offer interview great team schedule").split()


def random_text(rng, lo=1, hi=12):
    return " ".join(rng.choice(WORDS, size=int(rng.integers(lo, hi))).tolist())


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
