"""Compiled kernels must agree with their pure-numpy twins."""

import json
import os
import subprocess
import sys

import numpy as np
import pytest

from antiwork import kernels


def lda_state(rng, n_docs=30, L=20, V=40, K=4):
    doc_ids = np.repeat(np.arange(n_docs), L).astype(np.int64)
    word_ids = rng.integers(0, V, doc_ids.size).astype(np.int64)
    z = rng.integers(0, K, doc_ids.size).astype(np.int64)
    n_dk = np.zeros((n_docs, K), np.int64)
    n_kw = np.zeros((K, V), np.int64)
    np.add.at(n_dk, (doc_ids, z), 1)
    np.add.at(n_kw, (z, word_ids), 1)
    return doc_ids, word_ids, z, n_dk, n_kw, n_kw.sum(axis=1), rng.random(doc_ids.size)


def test_lda_sweep_equivalence():
    rng = np.random.default_rng(0)
    a = lda_state(rng)
    b = [x.copy() for x in a]
    for _ in range(3):
        kernels.lda_sweep(*a[:7], 0.5, 0.01)
        kernels.lda_sweep.py_func(*b[:7], 0.5, 0.01)
    for x, y in zip(a[:6], b[:6]):
        assert np.array_equal(x, y)
    # counts stay consistent with assignments
    assert a[3].sum() == a[0].size and np.array_equal(a[4].sum(axis=1), a[5])


def test_foldin_equivalence():
    rng = np.random.default_rng(1)
    doc_ids, word_ids, z, n_dk, _, _, u = lda_state(rng)
    phi = rng.dirichlet(np.ones(40), size=4)
    z2, n2 = z.copy(), n_dk.copy()
    kernels.lda_foldin_sweep(doc_ids, word_ids, z, n_dk, phi, u, 0.5)
    kernels.lda_foldin_sweep.py_func(doc_ids, word_ids, z2, n2, phi, u, 0.5)
    assert np.array_equal(z, z2) and np.array_equal(n_dk, n2)


@pytest.mark.parametrize("n_a,n_b", [(1, 1), (2, 5), (7, 9), (10, 10)])
def test_rank_null_equivalence(n_a, n_b):
    assert np.array_equal(kernels.rank_sum_null_counts(n_a, n_b), kernels.rank_sum_null_counts.py_func(n_a, n_b))


def test_gru_equivalence():
    rng = np.random.default_rng(2)
    T, B, D, H = 6, 5, 7, 4
    X = rng.standard_normal((T, B, D))
    mask = (rng.random((T, B)) < 0.7).astype(float)
    mask[0] = 1
    W, U = rng.standard_normal((D, 3 * H)) * 0.3, rng.standard_normal((H, 3 * H)) * 0.3
    b, bhn = rng.standard_normal(3 * H) * 0.1, rng.standard_normal(H) * 0.1
    fa = kernels.gru_forward(X, mask, W, U, b, bhn)
    fb = kernels.gru_forward.py_func(X, mask, W, U, b, bhn)
    for x, y in zip(fa, fb):
        np.testing.assert_allclose(x, y, rtol=1e-12, atol=1e-13)
    g = rng.standard_normal((B, H))
    ga = kernels.gru_backward(X, mask, W, U, *fa, g)
    gb = kernels.gru_backward.py_func(X, mask, W, U, *fb, g)
    for x, y in zip(ga, gb):
        np.testing.assert_allclose(x, y, rtol=1e-12, atol=1e-13)


_SCRIPT = """
import json, numpy as np
from antiwork import kernels
from antiwork.analysis.topics import fit_lda
from antiwork.analysis.stats import rank_test
rng = np.random.default_rng(0)
docs = [[f"w{int(i)}" for i in rng.integers(0, 30, 25)] for _ in range(40)]
m = fit_lda(docs, K=3, iters=20, seed=0)
print(json.dumps({"numba": kernels.USE_NUMBA, "phi": m.topic_word.round(12).tolist(),
                  "p": rank_test([1.5, 2, 7, 9], [3, 4, 5, 10, 11]).p}))
"""


def _run(no_numba):
    env = dict(os.environ)
    env.pop("ANTIWORK_NO_NUMBA", None)
    if no_numba:
        env["ANTIWORK_NO_NUMBA"] = "1"
    out = subprocess.run([sys.executable, "-c", _SCRIPT], env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout)


def test_env_switch_selects_fallback_with_identical_results():
    fast, slow = _run(False), _run(True)
    assert slow["numba"] is False
    assert fast["phi"] == slow["phi"] and fast["p"] == slow["p"]
