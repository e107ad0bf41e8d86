"""Diagnostics that predict when clustering pays off.

Three properties of a dataset govern acceleration: low local intrinsic
dimension (ball growth), near-uniform density, and (for non-metric
distances) a small triangle-violation rate, which bounds how much
sensitivity the coarse stage can lose. The estimators here quantify
each one, plus simple closed-form predictions to compare against
measured behavior.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .clustering import ClusteredDatabase
from .core import Dataset, EvalCounter, Point, query_distances
from .search import search


def local_fractal_dimension(
    dataset: Dataset,
    q: Point,
    r1: float,
    r2: float,
    counter: Optional[EvalCounter] = None,
) -> Optional[float]:
    """Ball-growth exponent at ``q``: log(n2/n1) / log(r2/r1).

    n1, n2 count dataset points within r1 and r2 of ``q``, excluding any
    dataset point whose id equals ``q.id``. Requires 0 < r1 < r2. Returns
    None when the inner ball is empty (the estimate is undefined there);
    n2 >= n1 always, so the result is never negative.
    """
    if r1 <= 0:
        raise ValueError(f"inner radius must be positive, got {r1}")
    if r2 <= r1:
        raise ValueError(f"need r1 < r2, got r1={r1}, r2={r2}")
    dm = query_distances(dataset, q, counter)
    keep = dataset.ids != q.id
    dm = dm[keep]
    n1 = int((dm <= r1).sum())
    n2 = int((dm <= r2).sum())
    if n1 == 0:
        return None
    return math.log(n2 / n1) / math.log(r2 / r1)


@dataclass
class FractalDimensionProfile:
    """Local dimension estimates across a radius grid.

    ``per_point_dims[i, j]`` is the estimate at sample point i between
    grid radii j and j+1 (NaN where undefined); ``mean_dims[j]`` averages
    the defined entries (NaN if none are).
    """

    radius_grid: np.ndarray
    sample_ids: np.ndarray
    per_point_dims: np.ndarray
    mean_dims: np.ndarray
    sample_seed: int


def fractal_profile(
    dataset: Dataset,
    samples: int,
    radius_grid: Sequence[float],
    seed: int = 0,
    counter: Optional[EvalCounter] = None,
) -> FractalDimensionProfile:
    """Estimate local dimension at seeded sample points over a grid.

    The grid must be strictly increasing and positive. Each sample point
    costs one scan of the dataset (n evaluations), reused across all
    grid radii.
    """
    grid = np.asarray(list(radius_grid), dtype=np.float64)
    if len(grid) < 2:
        raise ValueError("radius grid needs at least two entries")
    if grid[0] <= 0 or (np.diff(grid) <= 0).any():
        raise ValueError("radius grid must be positive and strictly increasing")
    if samples <= 0:
        raise ValueError(f"samples must be positive, got {samples}")
    n = len(dataset)
    if n == 0:
        raise ValueError("cannot profile an empty dataset")

    rng = np.random.default_rng(seed)
    m = min(samples, n)
    rows = rng.choice(n, size=m, replace=False)
    sample_ids = dataset.ids[rows].copy()

    per_point = np.full((m, len(grid) - 1), np.nan)
    for i in range(m):
        anchor = Point(int(sample_ids[i]), dataset.coords[rows[i]])
        dm = query_distances(dataset, anchor, counter)
        dm = dm[dataset.ids != anchor.id]
        counts = (dm[None, :] <= grid[:, None]).sum(axis=1)
        for j in range(len(grid) - 1):
            n1, n2 = int(counts[j]), int(counts[j + 1])
            if n1 > 0:
                per_point[i, j] = math.log(n2 / n1) / math.log(grid[j + 1] / grid[j])

    defined = ~np.isnan(per_point)
    mean_dims = np.full(len(grid) - 1, np.nan)
    for j in range(len(grid) - 1):
        col = per_point[defined[:, j], j]
        if len(col):
            mean_dims[j] = col.mean()
    return FractalDimensionProfile(grid, sample_ids, per_point, mean_dims, seed)


def predicted_speedup(db: ClusteredDatabase) -> float:
    """Expected comparison-count ratio of naive scan to coarse search: n / k.

    The coarse stage touches k centers where a scan touches n points, so
    this is the ceiling on acceleration when candidate clusters stay
    small. Meaningless (and an error) for an empty database.
    """
    if db.k == 0:
        raise ValueError("empty database has no predicted speedup")
    return len(db.dataset) / db.k


def predicted_candidate_bound(
    output_size: int, r: float, r_c: float, d: float, k: int
) -> float:
    """Model-predicted total evaluations: k + |output| * ((r + 2 r_c) / r)^d.

    Every fine-stage candidate lies within r + 2 r_c of the query, so
    with ball growth exponent ``d`` the candidate count scales the output
    size by ((r + 2 r_c) / r)^d. Requires r > 0.
    """
    if r <= 0:
        raise ValueError(f"radius must be positive, got {r}")
    if r_c < 0:
        raise ValueError(f"cluster radius must be non-negative, got {r_c}")
    if output_size < 0 or k < 0:
        raise ValueError("output_size and k must be non-negative")
    return k + output_size * ((r + 2.0 * r_c) / r) ** d


@dataclass
class TriangleViolationReport:
    """Observed rate of d(x, z) > d(x, y) + d(y, z) over sampled triples."""

    triples_checked: int
    violations: int
    alpha: float
    exhaustive: bool


def triangle_violation_rate(
    dataset: Dataset,
    triples: Optional[int] = None,
    seed: int = 0,
) -> TriangleViolationReport:
    """Measure how often the triangle inequality fails.

    ``triples=None`` checks every ordered-middle triple exhaustively when
    n <= 60 and falls back to 100,000 seeded samples otherwise; pass an
    explicit count to force sampling. The resulting alpha bounds the
    sensitivity loss of clustered search: expected recall >= 1 - alpha.
    Excesses within a few ulps of the bound are not counted, so exact
    metrics report zero even when their distances round (jaccard's i/u
    can land an ulp past the sum of two exact thirds, say).
    """
    n = len(dataset)
    if n < 3:
        raise ValueError("need at least three points to test the triangle inequality")
    code = dataset.distance.code
    coords = dataset.coords
    tol = 4.0 * np.finfo(np.float64).eps

    if triples is None and n <= 60:
        D = np.empty((n, n), dtype=np.float64)
        for i in range(n):
            D[i] = kernels.dists(code, coords[i], coords)
        checked = 0
        violations = 0
        for y in range(n):
            # d(x, z) > d(x, y) + d(y, z) for all unordered pairs {x, z}
            bound = D[:, y : y + 1] + D[y : y + 1, :]
            excess = D - bound
            mask = np.triu(np.ones((n, n), dtype=bool), k=1)
            mask[y, :] = False
            mask[:, y] = False
            checked += int(mask.sum())
            violations += int((excess[mask] > tol * bound[mask]).sum())
        return TriangleViolationReport(checked, violations, violations / checked, True)

    m = 100_000 if triples is None else int(triples)
    if m <= 0:
        raise ValueError(f"triples must be positive, got {m}")
    rng = np.random.default_rng(seed)
    xs = np.empty(m, dtype=np.int64)
    ys = np.empty(m, dtype=np.int64)
    zs = np.empty(m, dtype=np.int64)
    filled = 0
    while filled < m:
        need = m - filled
        cand = rng.integers(0, n, size=(need, 3))
        ok = (
            (cand[:, 0] != cand[:, 1])
            & (cand[:, 1] != cand[:, 2])
            & (cand[:, 0] != cand[:, 2])
        )
        good = cand[ok]
        xs[filled : filled + len(good)] = good[:, 0]
        ys[filled : filled + len(good)] = good[:, 1]
        zs[filled : filled + len(good)] = good[:, 2]
        filled += len(good)
    d_xz = kernels.pair_rows(code, coords[xs], coords[zs])
    d_xy = kernels.pair_rows(code, coords[xs], coords[ys])
    d_yz = kernels.pair_rows(code, coords[ys], coords[zs])
    bound = d_xy + d_yz
    violations = int((d_xz - bound > tol * bound).sum())
    return TriangleViolationReport(m, violations, violations / m, False)


@dataclass
class DensityUniformityReport:
    """Spread of ball populations at a fixed radius across sample points."""

    radius: float
    samples: int
    min_count: int
    max_count: int
    mean_count: float
    gamma_hat: float


def density_uniformity(
    dataset: Dataset,
    radius: float,
    samples: int,
    seed: int = 0,
    counter: Optional[EvalCounter] = None,
) -> DensityUniformityReport:
    """Estimate density imbalance gamma_hat = max(max/mean, mean/min).

    Counts dataset neighbors within ``radius`` of seeded sample points
    (anchor excluded). gamma_hat >= 1 by construction and is infinite
    when some sampled ball is empty; large values flag datasets where a
    few dense clusters will dominate fine-stage cost.
    """
    if radius <= 0:
        raise ValueError(f"radius must be positive, got {radius}")
    if samples <= 0:
        raise ValueError(f"samples must be positive, got {samples}")
    n = len(dataset)
    if n == 0:
        raise ValueError("cannot profile an empty dataset")
    rng = np.random.default_rng(seed)
    m = min(samples, n)
    rows = rng.choice(n, size=m, replace=False)
    counts = np.empty(m, dtype=np.int64)
    for i, row in enumerate(rows):
        anchor = Point(int(dataset.ids[row]), dataset.coords[row])
        dm = query_distances(dataset, anchor, counter)
        dm = dm[dataset.ids != anchor.id]
        counts[i] = int((dm <= radius).sum())
    mn = int(counts.min())
    mx = int(counts.max())
    mean = float(counts.mean())
    if mn == 0:
        gamma = math.inf
    else:
        gamma = max(mx / mean, mean / mn)
    return DensityUniformityReport(radius, m, mn, mx, mean, gamma)


@dataclass
class RecallReport:
    """Clustered search measured against the brute-force oracle."""

    recalls: list[float]
    mean_recall: float
    eval_ratios: list[float]
    mean_eval_ratio: float


def recall_vs_oracle(
    db: ClusteredDatabase,
    queries: Sequence[tuple[Point, float]],
    counter: Optional[EvalCounter] = None,
) -> RecallReport:
    """Run (query, radius) pairs both ways and compare.

    Recall is |found ∩ true| / |true| (1.0 when the true set is empty);
    the eval ratio is n over the clustered cost k + |candidates|. Oracle
    scans are not charged to ``counter``; only the clustered searches
    are.
    """
    if not len(queries):
        raise ValueError("need at least one query")
    n = len(db.dataset)
    recalls: list[float] = []
    ratios: list[float] = []
    for q, r in queries:
        res = search(db, q, r, counter)
        truth_dm = kernels.dists(db.dataset.distance.code, q.coords, db.dataset.coords)
        truth = {int(i) for i in db.dataset.ids[truth_dm <= r]}
        found = {pid for pid, _ in res.hits}
        recalls.append(len(found & truth) / len(truth) if truth else 1.0)
        cost = res.stats.coarse_evals + res.stats.fine_evals
        ratios.append(n / cost if cost else 1.0)
    return RecallReport(
        recalls, float(np.mean(recalls)), ratios, float(np.mean(ratios))
    )
