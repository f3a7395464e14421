"""Compare compiled kernels against their pure-numpy ``py_func`` twins.

    python benchmarks/bench_kernels.py [--repeat 5] [--quick]

Prints one row per kernel: best wall time for each path, speedup, and the
max absolute difference between the two outputs.  Under ANTIWORK_NO_NUMBA=1
both columns run the same numpy code.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from antiwork import kernels


def _best(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def _lda_case(rng, n_docs, doc_len, V, K):
    doc_ids = np.repeat(np.arange(n_docs), doc_len).astype(np.int64)
    word_ids = rng.integers(0, V, size=doc_ids.size).astype(np.int64)
    z0 = rng.integers(0, K, size=doc_ids.size).astype(np.int64)
    u = rng.random(doc_ids.size)

    def run(kernel):
        z = z0.copy()
        n_dk = np.zeros((n_docs, K), dtype=np.int64)
        n_kw = np.zeros((K, V), dtype=np.int64)
        np.add.at(n_dk, (doc_ids, z), 1)
        np.add.at(n_kw, (z, word_ids), 1)
        n_k = n_kw.sum(axis=1)
        kernel(doc_ids, word_ids, z, n_dk, n_kw, n_k, u, 50.0 / K, 0.01)
        return n_kw.astype(float)

    return run


def _gru_case(rng, T, B, D, H):
    X = rng.standard_normal((T, B, D))
    mask = (rng.random((T, B)) < 0.9).astype(float)
    mask[0] = 1.0
    W = rng.standard_normal((D, 3 * H)) * 0.1
    U = rng.standard_normal((H, 3 * H)) * 0.1
    b = rng.standard_normal(3 * H) * 0.1
    bhn = rng.standard_normal(H) * 0.1
    g = rng.standard_normal((B, H))

    def fwd(kernel):
        return kernel(X, mask, W, U, b, bhn)[0]

    def both(fwd_k, bwd_k):
        Hs, Z, R, Nc, HN = fwd_k(X, mask, W, U, b, bhn)
        return bwd_k(X, mask, W, U, Hs, Z, R, Nc, HN, g)[0]

    return fwd, both


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--quick", action="store_true", help="small sizes, for smoke runs")
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    s = 4 if args.quick else 1

    lda_run = _lda_case(rng, 400 // s, 60, 2000, 10)
    fwd, both = _gru_case(rng, 12, 32, 79, 128 // s)
    cases = [
        ("lda_sweep", lambda: lda_run(kernels.lda_sweep), lambda: lda_run(kernels.lda_sweep.py_func)),
        ("rank_sum_null_counts", lambda: kernels.rank_sum_null_counts(10, 10),
         lambda: kernels.rank_sum_null_counts.py_func(10, 10)),
        ("gru_forward", lambda: fwd(kernels.gru_forward), lambda: fwd(kernels.gru_forward.py_func)),
        ("gru_forward+backward", lambda: both(kernels.gru_forward, kernels.gru_backward),
         lambda: both(kernels.gru_forward.py_func, kernels.gru_backward.py_func)),
    ]
    print(f"numba enabled: {kernels.USE_NUMBA}")
    print(f"{'kernel':<22} {'compiled s':>11} {'numpy s':>10} {'speedup':>8} {'max |diff|':>11}")
    for name, compiled, pure in cases:
        compiled()  # warm-up / compilation
        tc, oc = _best(compiled, args.repeat)
        tp, op = _best(pure, max(1, args.repeat // 2))
        diff = float(np.max(np.abs(np.asarray(oc) - np.asarray(op))))
        print(f"{name:<22} {tc:11.5f} {tp:10.5f} {tp / tc:8.1f} {diff:11.3g}")


if __name__ == "__main__":
    main()
