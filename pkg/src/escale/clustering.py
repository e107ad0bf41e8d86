"""Greedy radius-bounded clustering over a dataset.

The structure maintained here is a partition of the dataset into
clusters of radius at most ``r_c`` whose centers are pairwise farther
than ``r_c`` apart. Both properties fall out of a two-pass build: a
greedy sweep over a seeded shuffle picks centers, then every point is
assigned to its nearest center. Search correctness (see ``search``)
needs only these two invariants, so inserts and deletes are free to
maintain them any way that is cheap.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np

from . import kernels
from .core import Dataset, EvalCounter, Point, _validate_coords


class Cluster:
    """One cluster: a center point id and its members.

    The distance from each member to the center is cached at assignment
    time. That makes ``observed_radius`` exact bookkeeping rather than
    recomputation, and lets non-center deletion cost zero evaluations.
    """

    __slots__ = ("center_id", "_dists", "_rows_stamp", "_rows_ids", "_rows")

    def __init__(self, center_id: int):
        self.center_id = center_id
        self._dists: dict[int, float] = {center_id: 0.0}
        self._rows_stamp = -1
        self._rows_ids: Optional[np.ndarray] = None
        self._rows: Optional[np.ndarray] = None

    @property
    def member_ids(self) -> set[int]:
        return set(self._dists)

    def __len__(self) -> int:
        return len(self._dists)

    def __contains__(self, point_id: int) -> bool:
        return point_id in self._dists

    @property
    def observed_radius(self) -> float:
        """Largest cached center-to-member distance."""
        return max(self._dists.values())

    def center_distance(self, point_id: int) -> float:
        return self._dists[point_id]

    def _add(self, point_id: int, dist: float) -> None:
        self._dists[point_id] = dist

    def _remove(self, point_id: int) -> None:
        del self._dists[point_id]

    def member_rows(self, dataset: Dataset) -> tuple[np.ndarray, np.ndarray]:
        """(ids, coordinate rows) for the members, ascending by id.

        Cached against the dataset's mutation counter; the gathered rows
        are reused across queries until the dataset changes.
        """
        if self._rows_stamp != dataset.mutation_count:
            ids = np.fromiter(sorted(self._dists), dtype=np.int64, count=len(self._dists))
            self._rows_ids = ids
            self._rows = dataset.coords[dataset.rows_for_ids(ids)]
            self._rows_stamp = dataset.mutation_count
        return self._rows_ids, self._rows

    def __repr__(self):
        return f"Cluster(center_id={self.center_id}, size={len(self._dists)})"


@dataclass
class ValidationReport:
    """Outcome of a full structural audit of a ClusteredDatabase."""

    partition_ok: bool
    separation_ok: bool
    radius_ok: bool
    observed_radius_ok: bool
    failures: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return (
            self.partition_ok
            and self.separation_ok
            and self.radius_ok
            and self.observed_radius_ok
        )


class ClusteredDatabase:
    """A dataset plus the cluster structure that accelerates search.

    Constructed by :func:`build`; afterwards mutated in place through
    ``insert`` and ``delete``. Center coordinates are kept in their own
    contiguous matrix so the coarse stage never touches member rows.
    """

    def __init__(self, dataset: Dataset, r_c: float, permutation_seed: int):
        if r_c < 0:
            raise ValueError(f"cluster radius must be non-negative, got {r_c}")
        self.dataset = dataset
        self.r_c = float(r_c)
        self.permutation_seed = int(permutation_seed)
        self.clusters: list[Cluster] = []
        self._assignment: dict[int, int] = {}  # point id -> cluster index
        cap = 16
        self._center_pids = np.empty(cap, dtype=np.int64)
        self._center_rows = np.empty((cap, dataset.dimension), dtype=np.float64)
        self._k = 0

    @property
    def k(self) -> int:
        return self._k

    def __len__(self) -> int:
        return len(self.dataset)

    @property
    def center_ids(self) -> np.ndarray:
        """Center point ids, aligned with ``center_coords`` rows."""
        return self._center_pids[: self._k]

    @property
    def center_coords(self) -> np.ndarray:
        return self._center_rows[: self._k]

    def cluster_of(self, point_id: int) -> int:
        """Index into ``clusters`` of the cluster holding ``point_id``."""
        ci = self._assignment.get(point_id)
        if ci is None:
            raise KeyError(f"unknown point id {point_id}")
        return ci

    def iter_assignments(self) -> Iterator[tuple[int, int]]:
        return iter(self._assignment.items())

    def _append_center(self, point_id: int, coords: np.ndarray) -> Cluster:
        if self._k == self._center_rows.shape[0]:
            cap = max(16, 2 * self._k)
            pids = np.empty(cap, dtype=np.int64)
            rows = np.empty((cap, self.dataset.dimension), dtype=np.float64)
            pids[: self._k] = self._center_pids[: self._k]
            rows[: self._k] = self._center_rows[: self._k]
            self._center_pids = pids
            self._center_rows = rows
        self._center_pids[self._k] = point_id
        self._center_rows[self._k] = coords
        cluster = Cluster(point_id)
        self.clusters.append(cluster)
        self._assignment[point_id] = self._k
        self._k += 1
        return cluster

    def _place(self, point_id: int, coords: np.ndarray, counter: Optional[EvalCounter]) -> None:
        """Attach an already-stored point: nearest cluster, or a new one.

        Costs exactly k evaluations (k as of the call), the advertised
        insertion price.
        """
        if self._k == 0:
            self._append_center(point_id, coords)
            return
        code = self.dataset.distance.code
        idx, dd, evals = kernels.assign_nearest(
            code, coords[None, :], self.center_coords, self.center_ids
        )
        if counter is not None:
            counter.add(evals, "build")
        if dd[0] <= self.r_c:
            ci = int(idx[0])
            self.clusters[ci]._add(point_id, float(dd[0]))
            self._assignment[point_id] = ci
        else:
            self._append_center(point_id, coords)

    def insert(self, p: Point, counter: Optional[EvalCounter] = None) -> "ClusteredDatabase":
        """Add a new point, preserving both cluster invariants.

        The point joins its nearest center's cluster when within r_c,
        otherwise it founds a new cluster. Either way this costs exactly
        k distance evaluations against the centers that existed on entry.
        """
        if p.id in self.dataset:
            raise ValueError(f"duplicate point id {p.id}")
        if p.dimension != self.dataset.dimension:
            raise ValueError(
                f"point {p.id} has dimension {p.dimension}, dataset has {self.dataset.dimension}"
            )
        _validate_coords(p.coords, self.dataset.distance, f"point {p.id}")
        self.dataset.add(p)
        self._place(p.id, self.dataset.coords[self.dataset.row_of(p.id)], counter)
        return self

    def delete(self, point_id: int, counter: Optional[EvalCounter] = None) -> "ClusteredDatabase":
        """Remove a point.

        A non-center removal is pure bookkeeping (zero evaluations). When
        a center goes, its whole cluster dissolves and the orphaned
        members are re-placed in ascending id order, k evaluations each.
        """
        ci = self._assignment.get(point_id)
        if ci is None:
            raise KeyError(f"unknown point id {point_id}")
        cluster = self.clusters[ci]
        if point_id != cluster.center_id:
            self.dataset.remove(point_id)
            cluster._remove(point_id)
            del self._assignment[point_id]
            return self

        orphans = sorted(cluster.member_ids - {point_id})
        for pid in orphans:
            del self._assignment[pid]
        del self._assignment[point_id]
        self.dataset.remove(point_id)

        self.clusters.pop(ci)
        keep = np.arange(self._k) != ci
        self._center_pids[: self._k - 1] = self._center_pids[: self._k][keep]
        self._center_rows[: self._k - 1] = self._center_rows[: self._k][keep]
        self._k -= 1
        for pid, idx in self._assignment.items():
            if idx > ci:
                self._assignment[pid] = idx - 1

        for pid in orphans:
            self._place(pid, self.dataset.coords[self.dataset.row_of(pid)], counter)
        return self


def build_permutation(seed: int, n: int) -> np.ndarray:
    """The seeded processing order used by :func:`build` (PCG64)."""
    return np.random.default_rng(seed).permutation(n)


def build(
    dataset: Dataset,
    r_c: float,
    seed: int = 0,
    counter: Optional[EvalCounter] = None,
) -> ClusteredDatabase:
    """Cluster a dataset in two passes.

    Pass 1 sweeps the points in a seeded random order and greedily keeps
    as a center every point farther than ``r_c`` from all centers so far.
    Pass 2 assigns every point to its nearest center, ties broken by the
    lowest center id. Deterministic given (dataset, r_c, seed); the total
    build cost is at most 2 n k evaluations.
    """
    db = ClusteredDatabase(dataset, r_c, seed)
    n = len(dataset)
    if n == 0:
        return db
    code = dataset.distance.code

    perm = build_permutation(seed, n)
    shuffled = dataset.coords[perm]
    sel, evals1 = kernels.greedy_select(code, shuffled, db.r_c)
    center_rows = perm[sel]
    center_pids = dataset.ids[center_rows].copy()
    center_coords = dataset.coords[center_rows].copy()

    idx, dd, evals2 = kernels.assign_nearest(code, dataset.coords, center_coords, center_pids)
    if counter is not None:
        counter.add(int(evals1) + int(evals2), "build")

    for j in range(len(center_pids)):
        db._append_center(int(center_pids[j]), center_coords[j])
    ids = dataset.ids
    for i in range(n):
        pid = int(ids[i])
        ci = int(idx[i])
        if pid == db.clusters[ci].center_id:
            continue
        db.clusters[ci]._add(pid, float(dd[i]))
        db._assignment[pid] = ci
    return db


def validate(db: ClusteredDatabase) -> ValidationReport:
    """Audit the two invariants plus bookkeeping consistency.

    Recomputes every center-member distance from scratch; intended for
    tests and debugging, not the hot path. Failures are reported, not
    raised.
    """
    failures: list[str] = []
    dataset = db.dataset
    code = dataset.distance.code

    partition_ok = True
    seen: dict[int, int] = {}
    for ci, cluster in enumerate(db.clusters):
        if cluster.center_id not in cluster:
            partition_ok = False
            failures.append(f"cluster {ci} does not contain its own center")
        for pid in cluster.member_ids:
            if pid in seen:
                partition_ok = False
                failures.append(f"point {pid} in clusters {seen[pid]} and {ci}")
            seen[pid] = ci
            if db._assignment.get(pid) != ci:
                partition_ok = False
                failures.append(f"point {pid} assignment does not match cluster {ci}")
    dataset_ids = {int(i) for i in dataset.ids}
    if set(seen) != dataset_ids:
        partition_ok = False
        missing = dataset_ids - set(seen)
        extra = set(seen) - dataset_ids
        if missing:
            failures.append(f"{len(missing)} dataset points missing from clusters")
        if extra:
            failures.append(f"{len(extra)} clustered ids not in the dataset")
    if db.k != len(db.clusters):
        partition_ok = False
        failures.append(f"k={db.k} but {len(db.clusters)} clusters")

    separation_ok = True
    C = db.center_coords
    for i in range(db.k - 1):
        dm = kernels.dists(code, C[i], C[i + 1 :])
        bad = np.flatnonzero(dm <= db.r_c)
        for b in bad:
            separation_ok = False
            failures.append(
                f"centers {int(db.center_ids[i])} and {int(db.center_ids[i + 1 + b])} "
                f"are {dm[b]:.6g} apart, within r_c"
            )

    radius_ok = True
    observed_radius_ok = True
    for ci, cluster in enumerate(db.clusters):
        ids, rows = cluster.member_rows(dataset)
        center = dataset.coords[dataset.row_of(cluster.center_id)]
        dm = kernels.dists(code, center, rows)
        if (dm > db.r_c).any():
            radius_ok = False
            worst = float(dm.max())
            failures.append(f"cluster {ci} has a member at {worst:.6g} > r_c from its center")
        for pid, dv in zip(ids, dm):
            if cluster._dists[int(pid)] != dv:
                observed_radius_ok = False
                failures.append(f"cluster {ci} cached distance for point {int(pid)} is stale")
                break
        if len(dm) and cluster.observed_radius != float(dm.max()):
            observed_radius_ok = False
            failures.append(f"cluster {ci} observed_radius does not match recomputation")

    return ValidationReport(partition_ok, separation_ok, radius_ok, observed_radius_ok, failures)
