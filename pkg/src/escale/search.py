"""Two-stage range search over a clustered database.

The coarse stage compares the query against the k cluster centers and
keeps every cluster whose center lies within r + r_c (optionally scaled;
see ``coarse_scale``). The fine stage re-evaluates the true distance to
every member of those clusters, so reported hits are exact regardless of
the distance used. For metric distances the triangle inequality makes
the coarse threshold lossless: no true hit can hide in a skipped
cluster. For cosine the same pipeline runs unchanged and misses only
points involved in triangle violations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .clustering import ClusteredDatabase
from .core import EvalCounter, Point, _check_query


@dataclass
class CandidateSet:
    """Clusters surviving the coarse stage, in cluster-index order.

    Tied to the database state it was computed from; mutating the
    database invalidates it.
    """

    cluster_ids: list[int]
    total_members: int
    _db: ClusteredDatabase = field(repr=False, compare=False)
    _stamp: int = field(repr=False, compare=False, default=-1)


@dataclass
class SearchStats:
    """Per-query cost accounting.

    coarse_evals is always k; fine_evals equals the total membership of
    the candidate clusters; candidate_fraction is that membership over n
    (0.0 for an empty database).
    """

    coarse_evals: int
    fine_evals: int
    clusters_scanned: int
    candidate_fraction: float


@dataclass
class QueryResult:
    """Hits as (id, distance) pairs, plus the cost of finding them."""

    hits: list[tuple[int, float]]
    stats: SearchStats


def coarse_search(
    db: ClusteredDatabase,
    q: Point,
    r: float,
    counter: Optional[EvalCounter] = None,
    *,
    coarse_scale: float = 1.0,
) -> CandidateSet:
    """Select candidate clusters by center distance.

    Costs exactly k evaluations. ``coarse_scale`` widens or narrows the
    center threshold (r + r_c) * coarse_scale; values below 1 trade
    sensitivity for speed and are strictly experimental.
    """
    if r < 0:
        raise ValueError(f"radius must be non-negative, got {r}")
    if coarse_scale <= 0:
        raise ValueError(f"coarse_scale must be positive, got {coarse_scale}")
    _check_query(db.dataset, q)
    stamp = db.dataset.mutation_count
    if db.k == 0:
        return CandidateSet([], 0, db, stamp)
    dm = kernels.dists(db.dataset.distance.code, q.coords, db.center_coords)
    if counter is not None:
        counter.add(db.k, "coarse")
    threshold = (r + db.r_c) * coarse_scale
    keep = np.flatnonzero(dm <= threshold)
    total = sum(len(db.clusters[int(ci)]) for ci in keep)
    return CandidateSet([int(ci) for ci in keep], total, db, stamp)


def fine_search(
    db: ClusteredDatabase,
    candidates: CandidateSet,
    q: Point,
    r: float,
    counter: Optional[EvalCounter] = None,
    *,
    sort_hits: bool = True,
) -> QueryResult:
    """Evaluate the true distance to every candidate-cluster member.

    Exactly ``candidates.total_members`` evaluations. Hits come back
    sorted by (distance, id) unless ``sort_hits`` is off (benchmarks
    exclude sorting from timed sections).
    """
    if r < 0:
        raise ValueError(f"radius must be non-negative, got {r}")
    if candidates._db is not db:
        raise ValueError("candidate set was built against a different database")
    if candidates._stamp != db.dataset.mutation_count:
        raise ValueError("candidate set is stale: the database has been mutated")
    _check_query(db.dataset, q)

    code = db.dataset.distance.code
    hits: list[tuple[int, float]] = []
    evaluated = 0
    for ci in candidates.cluster_ids:
        ids, rows = db.clusters[ci].member_rows(db.dataset)
        dm = kernels.dists(code, q.coords, rows)
        evaluated += len(ids)
        for pos in np.flatnonzero(dm <= r):
            hits.append((int(ids[pos]), float(dm[pos])))
    if counter is not None:
        counter.add(evaluated, "fine")
    if sort_hits:
        hits.sort(key=lambda h: (h[1], h[0]))

    n = len(db.dataset)
    stats = SearchStats(
        coarse_evals=db.k,
        fine_evals=evaluated,
        clusters_scanned=len(candidates.cluster_ids),
        candidate_fraction=(candidates.total_members / n) if n else 0.0,
    )
    return QueryResult(hits, stats)


def search(
    db: ClusteredDatabase,
    q: Point,
    r: float,
    counter: Optional[EvalCounter] = None,
    *,
    coarse_scale: float = 1.0,
    sort_hits: bool = True,
) -> QueryResult:
    """Coarse stage then fine stage; k + |candidates| evaluations total."""
    candidates = coarse_search(db, q, r, counter, coarse_scale=coarse_scale)
    return fine_search(db, candidates, q, r, counter, sort_hits=sort_hits)
