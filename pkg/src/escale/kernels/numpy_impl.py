"""Pure-numpy distance kernels.

Reference implementation of the kernel API; the numba backend in
``numba_impl`` mirrors these semantics exactly. All functions take a
distance-kind code (see ``escale.kernels``) so a single compiled path
serves every distance.

Float discipline: every reduction runs along axis 1 of a C-contiguous
float64 matrix, never through BLAS. Numpy's pairwise summation then
yields bit-identical values for the same pair of vectors no matter how
rows are batched or gathered, which the rest of the package relies on
(observed radii, oracle cross-checks).
"""

from __future__ import annotations

import numpy as np

EUCLIDEAN = 0
COSINE = 1
HAMMING = 2
JACCARD = 3


def dists(code: int, q: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Distances from vector ``q`` to every row of ``X``.

    ``q`` has shape (d,), ``X`` has shape (n, d); returns shape (n,).
    """
    if code == EUCLIDEAN:
        diff = X - q
        return np.sqrt((diff * diff).sum(axis=1))
    if code == COSINE:
        dot = (X * q).sum(axis=1)
        nq = np.sqrt((q * q).sum())
        nx = np.sqrt((X * X).sum(axis=1))
        out = 1.0 - dot / (nx * nq)
        # identical vectors must come out at exactly 0, and rounding must
        # never produce a small negative distance
        np.maximum(out, 0.0, out=out)
        if len(X):
            out[(X == q).all(axis=1)] = 0.0
        return out
    if code == HAMMING:
        return (X != q).sum(axis=1).astype(np.float64)
    if code == JACCARD:
        sq = q > 0.0
        sx = X > 0.0
        inter = (sx & sq).sum(axis=1)
        union = (sx | sq).sum(axis=1)
        out = np.zeros(len(X), dtype=np.float64)
        nz = union > 0
        out[nz] = 1.0 - inter[nz] / union[nz]
        return out
    raise ValueError(f"unknown distance code {code}")


def pair_rows(code: int, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Distances between corresponding rows of two (m, d) matrices."""
    if code == EUCLIDEAN:
        diff = A - B
        return np.sqrt((diff * diff).sum(axis=1))
    if code == COSINE:
        dot = (A * B).sum(axis=1)
        na = np.sqrt((A * A).sum(axis=1))
        nb = np.sqrt((B * B).sum(axis=1))
        out = 1.0 - dot / (na * nb)
        np.maximum(out, 0.0, out=out)
        if len(A):
            out[(A == B).all(axis=1)] = 0.0
        return out
    if code == HAMMING:
        return (A != B).sum(axis=1).astype(np.float64)
    if code == JACCARD:
        sa = A > 0.0
        sb = B > 0.0
        inter = (sa & sb).sum(axis=1)
        union = (sa | sb).sum(axis=1)
        out = np.zeros(len(A), dtype=np.float64)
        nz = union > 0
        out[nz] = 1.0 - inter[nz] / union[nz]
        return out
    raise ValueError(f"unknown distance code {code}")


def greedy_select(code: int, X: np.ndarray, r_c: float) -> tuple[np.ndarray, int]:
    """One greedy sweep over the rows of ``X`` in order.

    Row i becomes a new center when it lies strictly farther than ``r_c``
    from every center chosen so far. Returns (row positions of the chosen
    centers, number of pair evaluations spent). Never exceeds one
    evaluation per (row, prior center) pair.
    """
    n = X.shape[0]
    buf = np.empty_like(X)
    pos = np.empty(n, dtype=np.int64)
    k = 0
    evals = 0
    for i in range(n):
        if k == 0:
            fresh = True
        else:
            dm = dists(code, X[i], buf[:k])
            evals += k
            fresh = bool((dm > r_c).all())
        if fresh:
            buf[k] = X[i]
            pos[k] = i
            k += 1
    return pos[:k].copy(), evals


def assign_nearest(
    code: int, X: np.ndarray, C: np.ndarray, center_pids: np.ndarray
) -> tuple[np.ndarray, np.ndarray, int]:
    """Nearest center for every row of ``X``.

    ``C`` holds center coordinates, ``center_pids`` the matching point ids
    used to break distance ties (lowest id wins). Returns (center index
    per row, distance per row, evaluation count). Always evaluates every
    (row, center) pair: callers count on exactly ``n * k`` evaluations.
    """
    n = X.shape[0]
    k = C.shape[0]
    idx = np.empty(n, dtype=np.int64)
    dd = np.empty(n, dtype=np.float64)
    for i in range(n):
        dm = dists(code, X[i], C)
        best = dm.min()
        ties = np.flatnonzero(dm == best)
        j = ties[0] if len(ties) == 1 else ties[np.argmin(center_pids[ties])]
        idx[i] = j
        dd[i] = best
    return idx, dd, n * k
