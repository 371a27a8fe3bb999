# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled best-split search; mirrors ``_split_py.best_split`` operation for operation."""
import numpy as np
cimport numpy as cnp
from libc.stdlib cimport malloc, free

cnp.import_array()

ctypedef struct Pair:
    double v
    Py_ssize_t lab


cdef inline void _swap(Pair* a, Py_ssize_t i, Py_ssize_t j) noexcept nogil:
    cdef Pair t = a[i]
    a[i] = a[j]
    a[j] = t


cdef void _sort(Pair* a, Py_ssize_t n) noexcept nogil:
    # quicksort on .v (median of three, Hoare partition), insertion sort for short runs.
    # The order among equal values is irrelevant: the sweep only cuts between distinct values.
    cdef Py_ssize_t i, j, m
    cdef double p
    cdef Pair t
    while n > 16:
        m = (n - 1) // 2
        if a[m].v < a[0].v:
            _swap(a, 0, m)
        if a[n - 1].v < a[0].v:
            _swap(a, 0, n - 1)
        if a[n - 1].v < a[m].v:
            _swap(a, m, n - 1)
        p = a[m].v
        i = -1
        j = n
        while True:
            i += 1
            while a[i].v < p:
                i += 1
            j -= 1
            while a[j].v > p:
                j -= 1
            if i >= j:
                break
            _swap(a, i, j)
        # recurse on the smaller side to bound stack depth
        if j + 1 < n - j - 1:
            _sort(a, j + 1)
            a = a + j + 1
            n = n - j - 1
        else:
            _sort(a + j + 1, n - j - 1)
            n = j + 1
    for i in range(1, n):
        t = a[i]
        j = i - 1
        while j >= 0 and a[j].v > t.v:
            a[j + 1] = a[j]
            j -= 1
        a[j + 1] = t


cdef inline double _entropy(const Py_ssize_t* c, Py_ssize_t n, Py_ssize_t K,
                            const double[::1] clogc, const double[::1] log2n) noexcept nogil:
    cdef double s = 0.0
    cdef Py_ssize_t k
    for k in range(K):
        s = s + clogc[c[k]]
    return log2n[n] - s / n


def best_split(const double[:, ::1] X, const Py_ssize_t[::1] y, const Py_ssize_t[::1] idx,
               const Py_ssize_t[::1] features, Py_ssize_t K,
               const double[::1] clogc, const double[::1] log2n, double tol):
    cdef Py_ssize_t n = idx.shape[0]
    cdef Py_ssize_t nf = features.shape[0]
    if n < 2 or nf == 0:
        return -1, float("nan"), float("nan")

    cdef Pair* pairs = <Pair*>malloc(n * sizeof(Pair))
    cdef Py_ssize_t* total = <Py_ssize_t*>malloc(K * sizeof(Py_ssize_t))
    cdef Py_ssize_t* left = <Py_ssize_t*>malloc(K * sizeof(Py_ssize_t))
    cdef Py_ssize_t* right = <Py_ssize_t*>malloc(K * sizeof(Py_ssize_t))
    igs_arr = np.full((nf, n - 1), -np.inf)
    thr_arr = np.zeros((nf, n - 1))
    cdef double[:, ::1] igs = igs_arr
    cdef double[:, ::1] thr = thr_arr
    cdef Py_ssize_t i, j, k, f, nl, nr
    cdef double hp, hl, hr, ig, a, b, mid, best = -np.inf
    try:
        with nogil:
            for k in range(K):
                total[k] = 0
            for i in range(n):
                total[y[idx[i]]] += 1
            hp = _entropy(total, n, K, clogc, log2n)

            for j in range(nf):
                f = features[j]
                for i in range(n):
                    pairs[i].v = X[idx[i], f]
                    pairs[i].lab = y[idx[i]]
                _sort(pairs, n)
                for k in range(K):
                    left[k] = 0
                for i in range(n - 1):
                    left[pairs[i].lab] += 1
                    a = pairs[i].v
                    b = pairs[i + 1].v
                    if not a < b:
                        continue
                    nl = i + 1
                    nr = n - nl
                    for k in range(K):
                        right[k] = total[k] - left[k]
                    hl = _entropy(left, nl, K, clogc, log2n)
                    hr = _entropy(right, nr, K, clogc, log2n)
                    ig = hp - (<double>nl / n) * hl - (<double>nr / n) * hr
                    mid = 0.5 * (a + b)
                    if mid >= b:
                        mid = a
                    igs[j, i] = ig
                    thr[j, i] = mid
                    if ig > best:
                        best = ig
    finally:
        free(pairs)
        free(total)
        free(left)
        free(right)

    if best == -np.inf:
        return -1, float("nan"), float("nan")
    cdef double cut = best - tol
    for j in range(nf):
        for i in range(n - 1):
            if igs[j, i] >= cut:
                return int(features[j]), thr[j, i], igs[j, i]
    return -1, float("nan"), float("nan")
