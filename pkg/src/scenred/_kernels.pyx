# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels for distance evaluation and greedy forward selection.

Signatures mirror ``_kernels_py``; all indices are 0-based here.
"""

import numpy as np

from libc.math cimport INFINITY, NAN

cdef Py_ssize_t KAHAN_THRESHOLD = 10000


def sq_euclidean(const double[:, ::1] X):
    cdef Py_ssize_t n = X.shape[0], d = X.shape[1], i, j, k
    cdef double s, diff
    out = np.zeros((n, n), dtype=np.float64)
    cdef double[:, ::1] C = out
    for i in range(n):
        for j in range(i + 1, n):
            s = 0.0
            for k in range(d):
                diff = X[i, k] - X[j, k]
                s += diff * diff
            C[i, j] = s
            C[j, i] = s
    return out


def nearest_selected(const double[:, ::1] C, const Py_ssize_t[::1] sel):
    """Row-wise minimum of ``C[i, sel]``; ``sel`` must be sorted ascending.

    Returns ``(mins, arg)`` where ``arg[i]`` is the position in ``sel`` of the
    first (smallest-index) minimiser.
    """
    cdef Py_ssize_t n = C.shape[0], k = sel.shape[0], i, a, best
    cdef double v, bv
    mins_arr = np.empty(n, dtype=np.float64)
    arg_arr = np.empty(n, dtype=np.intp)
    cdef double[::1] mins = mins_arr
    cdef Py_ssize_t[::1] arg = arg_arr
    for i in range(n):
        bv = INFINITY
        best = -1
        for a in range(k):
            v = C[i, sel[a]]
            if v < bv or best < 0:
                bv = v
                best = a
        mins[i] = bv
        arg[i] = best
    return mins_arr, arg_arr


def masked_weighted_sum(const double[::1] p, const double[::1] v, const unsigned char[::1] skip):
    """sum_i p[i] * v[i] over i with skip[i] == 0; compensated when n is large."""
    cdef Py_ssize_t n = p.shape[0], i
    cdef double s = 0.0, c = 0.0, y, t
    if n > KAHAN_THRESHOLD:
        for i in range(n):
            if skip[i]:
                continue
            y = p[i] * v[i] - c
            t = s + y
            c = (t - s) - y
            s = t
    else:
        for i in range(n):
            if not skip[i]:
                s += p[i] * v[i]
    return s


def forward_select(const double[:, ::1] C, const double[::1] p, Py_ssize_t m):
    """Greedy selection of ``m`` columns.

    Returns ``(picks, objectives)``; ``objectives[k, j]`` is the candidate
    value of ``j`` at iteration ``k`` (NaN for already-selected ``j``).
    """
    cdef Py_ssize_t n = C.shape[0], k, i, j, best
    cdef double s, c, cu, bv
    CT_arr = np.ascontiguousarray(np.asarray(C).T)
    cdef const double[:, ::1] CT = CT_arr
    cur_arr = np.full(n, INFINITY, dtype=np.float64)
    cdef double[::1] cur = cur_arr
    sel_arr = np.zeros(n, dtype=np.uint8)
    cdef unsigned char[::1] sel = sel_arr
    picks_arr = np.empty(m, dtype=np.intp)
    cdef Py_ssize_t[::1] picks = picks_arr
    obj_arr = np.full((m, n), NAN, dtype=np.float64)
    cdef double[:, ::1] obj = obj_arr

    for k in range(m):
        bv = INFINITY
        best = -1
        for j in range(n):
            if sel[j]:
                continue
            s = 0.0
            for i in range(n):
                if sel[i] or i == j:
                    continue
                c = CT[j, i]
                cu = cur[i]
                s += p[i] * (cu if cu < c else c)
            obj[k, j] = s
            if best < 0 or s < bv:
                bv = s
                best = j
        picks[k] = best
        sel[best] = 1
        for i in range(n):
            c = CT[best, i]
            if c < cur[i]:
                cur[i] = c
    return picks_arr, obj_arr
