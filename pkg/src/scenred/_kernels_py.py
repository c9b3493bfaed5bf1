"""Numpy fallback for the compiled kernels in ``_kernels.pyx``.

Same signatures and semantics; used when the extension is not built or
``SCENRED_PURE_PYTHON`` is set.
"""

import math

import numpy as np
from scipy.spatial.distance import cdist

KAHAN_THRESHOLD = 10_000
_CHUNK = 256


def sq_euclidean(X):
    X = np.ascontiguousarray(X, dtype=float)
    C = cdist(X, X, "sqeuclidean")
    np.fill_diagonal(C, 0.0)
    return C


def nearest_selected(C, sel):
    sub = np.asarray(C)[:, np.asarray(sel)]
    arg = np.argmin(sub, axis=1)
    return sub[np.arange(sub.shape[0]), arg], arg.astype(np.intp)


def masked_weighted_sum(p, v, skip):
    keep = ~np.asarray(skip, dtype=bool)
    terms = np.asarray(p)[keep] * np.asarray(v)[keep]
    if len(p) > KAHAN_THRESHOLD:
        return math.fsum(terms)
    return float(np.sum(terms))


def forward_select(C, p, m):
    C = np.asarray(C, dtype=float)
    p = np.asarray(p, dtype=float)
    n = C.shape[0]
    cur = np.full(n, np.inf)
    selected = np.zeros(n, dtype=bool)
    picks = np.empty(m, dtype=np.intp)
    obj = np.full((m, n), np.nan)
    for k in range(m):
        R = np.flatnonzero(~selected)
        pR = p[R]
        curR = cur[R]
        vals = np.empty(len(R))
        for start in range(0, len(R), _CHUNK):
            cand = R[start:start + _CHUNK]
            # rows: candidate j, columns: i in R
            block = np.minimum(curR[None, :], C[np.ix_(R, cand)].T)
            rows = np.arange(len(cand))
            block[rows, start + rows] = 0.0
            vals[start:start + len(cand)] = block @ pR
        obj[k, R] = vals
        best = R[int(np.argmin(vals))]
        picks[k] = best
        selected[best] = True
        np.minimum(cur, C[:, best], out=cur)
    return picks, obj
