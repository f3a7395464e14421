import numpy as np
import pytest
from hypothesis import given, strategies as st

from antiwork.attribution import (
    AttributionResult,
    BackendCapabilityError,
    attribute_user,
    integrated_gradients,
    merge_subwords,
    normalize_scores,
    riemann_integrated_gradients,
)
from antiwork.cohort import Label, LabeledUser

from conftest import hashing_classifier, make_user, random_text


def test_linear_probe_exact():
    rng = np.random.default_rng(0)
    for _ in range(20):
        w, x = rng.standard_normal(7), rng.standard_normal(7)
        grad = lambda pts: np.broadcast_to(w, pts.shape)  # noqa: E731
        for steps in (1, 3, 50):
            s = riemann_integrated_gradients(grad, x, steps=steps)
            np.testing.assert_allclose(s, w * x, atol=1e-12)
            assert abs(s.sum() - w @ x) <= 1e-6


def test_zero_input_zero_scores():
    s = riemann_integrated_gradients(lambda p: 2 * p, np.zeros(4))
    assert not s.any()


def test_square_probe_error_decay():
    # F(x) = x^2, x = 1, baseline 0: exact attribution is 1; right sum gives 1 + 1/steps
    errs = []
    for steps in (8, 64, 512):
        s = riemann_integrated_gradients(lambda p: 2 * p, np.array([1.0]), steps=steps)
        errs.append(abs(s[0] - 1.0))
        assert errs[-1] == pytest.approx(1.0 / steps, rel=1e-9)
    assert errs[0] > errs[1] > errs[2]
    assert errs[0] / errs[2] == pytest.approx(64.0, rel=1e-6)


def _user(rng, n_posts=3):
    times = [("jobs", 1)] + [("antiwork", i + 2) for i in range(n_posts - 1)]
    return LabeledUser(make_user("u", times, [random_text(rng) for _ in range(n_posts)]), Label.ANTIWORK)


def test_completeness_on_hashing_fixtures():
    rng = np.random.default_rng(0)
    for i in range(10):
        clf = hashing_classifier(seed=i)
        u = _user(rng, int(rng.integers(1, 4)))
        t = int(rng.integers(0, len(u.record.posts)))
        r128 = integrated_gradients(clf, u, t, steps=128)
        gap = abs(r128.logit - r128.baseline_logit)
        assert r128.convergence_delta <= max(1e-4, 0.01 * gap)
        assert abs(sum(r128.scores) - (r128.logit - r128.baseline_logit)) == pytest.approx(r128.convergence_delta)
        r256 = integrated_gradients(clf, u, t, steps=256)
        assert r256.convergence_delta <= r128.convergence_delta + 1e-9


def test_logit_matches_classifier():
    rng = np.random.default_rng(1)
    clf = hashing_classifier(seed=3)
    u = _user(rng)
    r = integrated_gradients(clf, u, 1, steps=16)
    assert r.logit == pytest.approx(float(clf.decision([u])[0]), abs=1e-12)


def test_scores_only_over_present_tokens():
    clf = hashing_classifier(seed=1)
    u = LabeledUser(make_user("u", [("jobs", 1), ("antiwork", 2)], ["the boss", "toxic boss boss"]), Label.ANTIWORK)
    r = integrated_gradients(clf, u, 1, steps=32)
    assert r.tokens == ["toxic", "boss", "boss"] and len(r.scores) == 3
    # identical tokens get identical scores under mean pooling
    assert r.scores[1] == pytest.approx(r.scores[2], abs=1e-15)


def test_empty_post():
    clf = hashing_classifier(seed=2)
    u = LabeledUser(make_user("u", [("jobs", 1), ("antiwork", 2)], ["a job", ""]), Label.ANTIWORK)
    r = integrated_gradients(clf, u, 1)
    assert r.tokens == [] and r.scores == [] and r.convergence_delta == pytest.approx(0.0, abs=1e-12)


def test_pad_baseline_and_attribute_user():
    rng = np.random.default_rng(4)
    clf = hashing_classifier(seed=4)
    u = _user(rng)
    res = attribute_user(clf, u, steps=64, baseline="pad")
    assert [r.post_id for r in res] == [p.id for p in u.record.posts]
    for r in res:
        assert r.convergence_delta <= max(1e-4, 0.01 * abs(r.logit - r.baseline_logit))


def test_target_index_range():
    clf = hashing_classifier()
    with pytest.raises(IndexError):
        integrated_gradients(clf, _user(np.random.default_rng(0)), 5)


def test_pad_baseline_needs_table():
    clf = hashing_classifier()
    inner = clf.featurizer.encoder

    class NoTable:
        dim = 8
        subword_scheme = "none"

        def encode(self, text):
            return inner.encode(text)

    clf.featurizer.encoder = NoTable()
    with pytest.raises(BackendCapabilityError):
        integrated_gradients(clf, _user(np.random.default_rng(0)), 0, baseline="pad")


@pytest.mark.parametrize("tokens,scheme,words", [
    (["un", "##fair", "pay"], "wordpiece", ["unfair", "pay"]),
    (["ĠI", "Ġhate", "work", "ing"], "bpe", ["I", "hateworking"]),
    (["a", "b"], "none", ["a", "b"]),
])
def test_merge_subwords(tokens, scheme, words):
    w, s = merge_subwords(tokens, [1.0] * len(tokens), scheme)
    assert w == words
    assert sum(s) == len(tokens)


def test_normalize():
    r = AttributionResult("p", ["a", "b"], [2.0, -4.0], 0.0, 8)
    assert normalize_scores(r).scores == [0.5, -1.0]
    z = normalize_scores(AttributionResult("p", ["a", "b"], [0.0, 0.0], 0.0, 8))
    assert z.scores == [0.0, 0.0] and z.all_zero


@given(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=1, max_size=30))
def test_normalize_argmax_invariant(scores):
    r = normalize_scores(AttributionResult("p", ["t"] * len(scores), scores, 0.0, 8))
    if not r.all_zero:
        assert np.argmax(np.abs(scores)) == np.argmax(np.abs(r.scores))
        assert max(abs(s) for s in r.scores) == pytest.approx(1.0)


def test_result_roundtrip_and_validation():
    r = AttributionResult("p", ["a"], [0.25], 1e-6, 50, 1.0, 0.5)
    assert AttributionResult.from_dict(r.to_dict()) == r
    with pytest.raises(ValueError):
        AttributionResult("p", ["a"], [], 0.0, 1)
