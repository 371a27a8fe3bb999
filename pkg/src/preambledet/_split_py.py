"""Numpy best-split search; the reference the compiled kernel must reproduce bit for bit."""
from __future__ import annotations

import numpy as np


def _entropy_rows(C: np.ndarray, n: np.ndarray, clogc: np.ndarray, log2n: np.ndarray) -> np.ndarray:
    # class-ordered sequential sum, same order as the compiled loop
    s = np.zeros(len(C))
    for k in range(C.shape[1]):
        s = s + clogc[C[:, k]]
    return log2n[n] - s / n


def best_split(X, y, idx, features, K, clogc, log2n, tol):
    n = len(idx)
    if n < 2 or len(features) == 0:
        return -1, float("nan"), float("nan")
    yi = y[idx]
    total = np.bincount(yi, minlength=K)
    hp = _entropy_rows(total[None, :], np.array([n]), clogc, log2n)[0]

    nl = np.arange(1, n)
    nr = n - nl
    wl = nl / n
    wr = nr / n
    per_feature = []
    best = -np.inf
    for f in features:
        v = X[idx, f]
        order = np.argsort(v)
        vs = v[order]
        onehot = np.zeros((n, K), dtype=np.int64)
        onehot[np.arange(n), yi[order]] = 1
        L = np.cumsum(onehot, axis=0)[:-1]
        valid = vs[:-1] < vs[1:]
        if not valid.any():
            per_feature.append(None)
            continue
        Lv = L[valid]
        hl = _entropy_rows(Lv, nl[valid], clogc, log2n)
        hr = _entropy_rows(total - Lv, nr[valid], clogc, log2n)
        ig = hp - wl[valid] * hl - wr[valid] * hr
        a, b = vs[:-1][valid], vs[1:][valid]
        mid = 0.5 * (a + b)
        mid = np.where(mid >= b, a, mid)
        per_feature.append((ig, mid))
        best = max(best, float(ig.max()))

    if best == -np.inf:
        return -1, float("nan"), float("nan")
    cut = best - tol
    for f, cand in zip(features, per_feature):
        if cand is None:
            continue
        ig, mid = cand
        hit = np.flatnonzero(ig >= cut)
        if len(hit):
            i = hit[0]
            return int(f), float(mid[i]), float(ig[i])
    return -1, float("nan"), float("nan")
