"""Numba-compiled distance kernels.

Same API and semantics as ``numpy_impl``; this is the hot path. All
kernels are cached to disk so the compile cost is paid once per
machine, and they release the GIL so benchmark fan-out can use threads.

Within this backend every distance goes through ``_pair``, so a given
pair of vectors always produces the same float no matter which kernel
asked. Cross-backend values may differ in the last ulp (different
summation order); nothing in the package compares floats across
backends.
"""

from __future__ import annotations

import numpy as np
from numba import njit

EUCLIDEAN = 0
COSINE = 1
HAMMING = 2
JACCARD = 3


@njit(cache=True, nogil=True)
def _pair(code: int, a: np.ndarray, b: np.ndarray) -> float:
    d = a.shape[0]
    if code == 0:  # euclidean
        s = 0.0
        for j in range(d):
            t = a[j] - b[j]
            s += t * t
        return np.sqrt(s)
    elif code == 1:  # cosine
        dot = 0.0
        sa = 0.0
        sb = 0.0
        same = True
        for j in range(d):
            x = a[j]
            y = b[j]
            dot += x * y
            sa += x * x
            sb += y * y
            if x != y:
                same = False
        if same:
            return 0.0
        v = 1.0 - dot / (np.sqrt(sa) * np.sqrt(sb))
        if v < 0.0:
            v = 0.0
        return v
    elif code == 2:  # hamming
        c = 0.0
        for j in range(d):
            if a[j] != b[j]:
                c += 1.0
        return c
    else:  # jaccard
        inter = 0
        union = 0
        for j in range(d):
            pa = a[j] > 0.0
            pb = b[j] > 0.0
            if pa and pb:
                inter += 1
                union += 1
            elif pa or pb:
                union += 1
        if union == 0:
            return 0.0
        return 1.0 - inter / union


@njit(cache=True, nogil=True)
def dists(code: int, q: np.ndarray, X: np.ndarray) -> np.ndarray:
    n = X.shape[0]
    out = np.empty(n, dtype=np.float64)
    for i in range(n):
        out[i] = _pair(code, q, X[i])
    return out


@njit(cache=True, nogil=True)
def pair_rows(code: int, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    n = A.shape[0]
    out = np.empty(n, dtype=np.float64)
    for i in range(n):
        out[i] = _pair(code, A[i], B[i])
    return out


@njit(cache=True, nogil=True)
def greedy_select(code: int, X: np.ndarray, r_c: float):
    n = X.shape[0]
    pos = np.empty(n, dtype=np.int64)
    k = 0
    evals = 0
    for i in range(n):
        fresh = True
        for j in range(k):
            evals += 1
            if _pair(code, X[i], X[pos[j]]) <= r_c:
                fresh = False
                break
        if fresh:
            pos[k] = i
            k += 1
    return pos[:k].copy(), evals


@njit(cache=True, nogil=True)
def assign_nearest(code: int, X: np.ndarray, C: np.ndarray, center_pids: np.ndarray):
    n = X.shape[0]
    k = C.shape[0]
    idx = np.empty(n, dtype=np.int64)
    dd = np.empty(n, dtype=np.float64)
    for i in range(n):
        best = np.inf
        bj = -1
        bpid = np.int64(0)
        for j in range(k):
            dv = _pair(code, X[i], C[j])
            if dv < best or (dv == best and center_pids[j] < bpid):
                best = dv
                bj = j
                bpid = center_pids[j]
        idx[i] = bj
        dd[i] = best
    return idx, dd, n * k
