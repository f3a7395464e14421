"""Hot numeric loops.

Every kernel here is plain numpy/Python that numba can compile unchanged.
When numba is importable the kernels are wrapped in ``numba.njit``; setting
``ANTIWORK_NO_NUMBA=1`` in the environment (before import) keeps the pure
numpy path.  The uncompiled function is always reachable as ``kernel.py_func``
so both paths can be compared inside one process.

Randomness never happens inside a kernel: callers pass pre-drawn uniforms, so
the compiled and uncompiled paths produce identical results.
"""

from __future__ import annotations

import os

import numpy as np


def _numba_requested() -> bool:
    return os.environ.get("ANTIWORK_NO_NUMBA", "").strip().lower() in ("", "0", "false", "no")


try:
    if not _numba_requested():
        raise ImportError("numba disabled by ANTIWORK_NO_NUMBA")
    import numba

    USE_NUMBA = True
except ImportError:
    USE_NUMBA = False


class _PyKernel:
    """Uncompiled stand-in exposing the same ``py_func`` attribute as a numba dispatcher."""

    def __init__(self, fn):
        self.py_func = fn
        self.__name__ = fn.__name__
        self.__doc__ = fn.__doc__

    def __call__(self, *args):
        return self.py_func(*args)


def jit(fn):
    if USE_NUMBA:
        return numba.njit(cache=True, nogil=True)(fn)
    return _PyKernel(fn)


# ---------------------------------------------------------------- LDA


@jit
def lda_sweep(doc_ids, word_ids, z, n_dk, n_kw, n_k, u, alpha, beta):
    """One collapsed-Gibbs sweep over every token, updating counts in place."""
    K = n_k.shape[0]
    V = n_kw.shape[1]
    vbeta = V * beta
    p = np.empty(K)
    for i in range(doc_ids.shape[0]):
        d = doc_ids[i]
        w = word_ids[i]
        k = z[i]
        n_dk[d, k] -= 1
        n_kw[k, w] -= 1
        n_k[k] -= 1
        total = 0.0
        for t in range(K):
            total += (n_dk[d, t] + alpha) * (n_kw[t, w] + beta) / (n_k[t] + vbeta)
            p[t] = total
        target = u[i] * total
        k = K - 1
        for t in range(K):
            if target < p[t]:
                k = t
                break
        z[i] = k
        n_dk[d, k] += 1
        n_kw[k, w] += 1
        n_k[k] += 1


@jit
def lda_foldin_sweep(doc_ids, word_ids, z, n_dk, phi, u, alpha):
    """Gibbs sweep with the topic-word distribution held fixed (held-out inference)."""
    K = phi.shape[0]
    p = np.empty(K)
    for i in range(doc_ids.shape[0]):
        d = doc_ids[i]
        w = word_ids[i]
        n_dk[d, z[i]] -= 1
        total = 0.0
        for t in range(K):
            total += (n_dk[d, t] + alpha) * phi[t, w]
            p[t] = total
        target = u[i] * total
        k = K - 1
        for t in range(K):
            if target < p[t]:
                k = t
                break
        z[i] = k
        n_dk[d, k] += 1


# ---------------------------------------------------------------- rank-sum null


@jit
def rank_sum_null_counts(n_a, n_b):
    """Number of orderings of ``n_a + n_b`` untied values giving each U in [0, n_a*n_b].

    Recurrence on the largest pooled value: it belongs to sample a (adding
    ``n_b`` to U) or to sample b (adding nothing).
    """
    top = n_a * n_b
    f = np.zeros((n_a + 1, n_b + 1, top + 1))
    for j in range(n_b + 1):
        f[0, j, 0] = 1.0
    for i in range(1, n_a + 1):
        f[i, 0, 0] = 1.0
        for j in range(1, n_b + 1):
            for u in range(i * j + 1):
                c = f[i, j - 1, u]
                if u >= j:
                    c += f[i - 1, j, u - j]
                f[i, j, u] = c
    return f[n_a, n_b].copy()


# ---------------------------------------------------------------- GRU


@jit
def _sigmoid(a):
    return 0.5 * (1.0 + np.tanh(0.5 * a))


@jit
def gru_forward(X, mask, W, U, b, bhn):
    """Run a gated recurrent cell over time-major inputs.

    X: (T, B, D); mask: (T, B) with 1 for real steps; W: (D, 3H); U: (H, 3H);
    b: (3H,) input-side bias; bhn: (H,) hidden-side bias of the candidate gate.
    Gate column order is [update, reset, candidate].  Masked steps carry the
    previous hidden state through unchanged.

    Returns (Hs, Z, R, Nc, HN) where Hs is (T+1, B, H) with Hs[0] = 0.
    """
    T = X.shape[0]
    B = X.shape[1]
    H = U.shape[0]
    Hs = np.zeros((T + 1, B, H))
    Z = np.zeros((T, B, H))
    R = np.zeros((T, B, H))
    Nc = np.zeros((T, B, H))
    HN = np.zeros((T, B, H))
    Uz = np.ascontiguousarray(U[:, :H])
    Ur = np.ascontiguousarray(U[:, H:2 * H])
    Un = np.ascontiguousarray(U[:, 2 * H:])
    for t in range(T):
        h = Hs[t]
        a = np.dot(X[t], W) + b
        z = _sigmoid(a[:, :H] + np.dot(h, Uz))
        r = _sigmoid(a[:, H:2 * H] + np.dot(h, Ur))
        hn = np.dot(h, Un) + bhn
        n = np.tanh(a[:, 2 * H:] + r * hn)
        h_new = (1.0 - z) * n + z * h
        m = mask[t][:, None]
        Hs[t + 1] = m * h_new + (1.0 - m) * h
        Z[t] = z
        R[t] = r
        Nc[t] = n
        HN[t] = hn
    return Hs, Z, R, Nc, HN


@jit
def gru_backward(X, mask, W, U, Hs, Z, R, Nc, HN, g_last):
    """Backpropagate ``g_last`` = dL/dh_T through :func:`gru_forward`.

    Returns (dW, dU, db, dbhn, dX).
    """
    T = X.shape[0]
    B = X.shape[1]
    D = X.shape[2]
    H = U.shape[0]
    dW = np.zeros((D, 3 * H))
    dU = np.zeros((H, 3 * H))
    db = np.zeros(3 * H)
    dbhn = np.zeros(H)
    dX = np.zeros((T, B, D))
    WT = np.ascontiguousarray(W.T)
    UT = np.ascontiguousarray(U.T)
    g = g_last.copy()
    da = np.empty((B, 3 * H))
    dh_u = np.empty((B, 3 * H))
    for t in range(T - 1, -1, -1):
        m = mask[t][:, None]
        h = Hs[t]
        z = Z[t]
        r = R[t]
        n = Nc[t]
        hn = HN[t]
        dh_new = g * m
        dn = dh_new * (1.0 - z)
        dz = dh_new * (h - n)
        dan = dn * (1.0 - n * n)
        dr = dan * hn
        dhn = dan * r
        daz = dz * z * (1.0 - z)
        dar = dr * r * (1.0 - r)
        da[:, :H] = daz
        da[:, H:2 * H] = dar
        da[:, 2 * H:] = dan
        dh_u[:, :H] = daz
        dh_u[:, H:2 * H] = dar
        dh_u[:, 2 * H:] = dhn
        dW += np.dot(np.ascontiguousarray(X[t].T), da)
        dU += np.dot(np.ascontiguousarray(h.T), dh_u)
        db += da.sum(axis=0)
        dbhn += dhn.sum(axis=0)
        dX[t] = np.dot(da, WT)
        g = g * (1.0 - m) + dh_new * z + np.dot(dh_u, UT)
    return dW, dU, db, dbhn, dX
