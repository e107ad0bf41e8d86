"""Points, datasets, distance descriptors, and evaluation counting.

Distance evaluations are the unit of cost everywhere in this package:
scaling claims are stated in evaluation counts, with wall-clock time as
a secondary check. Anything that computes a distance threads through an
optional :class:`EvalCounter` so tests can audit cost exactly.
"""

from __future__ import annotations

import threading
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional

import numpy as np

from . import kernels

KINDS = ("euclidean", "cosine", "hamming", "jaccard")

_CODES = {
    "euclidean": kernels.EUCLIDEAN,
    "cosine": kernels.COSINE,
    "hamming": kernels.HAMMING,
    "jaccard": kernels.JACCARD,
}

# cosine is the odd one out: 1 - cos can violate the triangle inequality
_METRIC = {"euclidean", "hamming", "jaccard"}


@dataclass(frozen=True)
class DistanceDescriptor:
    """Names the distance a dataset is searched under.

    kind: one of ``euclidean``, ``cosine`` (1 - cosine similarity),
    ``hamming`` (count of differing coordinates), ``jaccard`` (on the
    support sets {i: v[i] > 0}).
    """

    kind: str

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown distance kind {self.kind!r}, expected one of {KINDS}")

    @property
    def is_metric(self) -> bool:
        """Whether the triangle inequality is guaranteed for this kind."""
        return self.kind in _METRIC

    @property
    def code(self) -> int:
        return _CODES[self.kind]


@dataclass(frozen=True, eq=False)
class Point:
    """An id plus a float64 coordinate vector.

    Coordinates are copied and coerced on construction; the stored array
    should be treated as read-only.
    """

    id: int
    coords: np.ndarray

    def __post_init__(self):
        if not isinstance(self.id, (int, np.integer)) or isinstance(self.id, bool):
            raise ValueError(f"point id must be an integer, got {self.id!r}")
        if self.id < 0:
            raise ValueError(f"point id must be non-negative, got {self.id}")
        coords = np.array(self.coords, dtype=np.float64, copy=True)
        if coords.ndim != 1:
            raise ValueError(f"coords must be 1-D, got shape {coords.shape}")
        object.__setattr__(self, "id", int(self.id))
        object.__setattr__(self, "coords", coords)

    @property
    def dimension(self) -> int:
        return self.coords.shape[0]


class EvalCounter:
    """Counts distance evaluations in three buckets: coarse, fine, build.

    A bucket is chosen per call via ``add(n, bucket=...)`` or for a block
    via the ``counting`` context manager; the default active bucket is
    ``fine``. Updates are lock-protected so concurrent benchmark workers
    can share one counter, but ``counting`` switches a counter-wide
    default and is not meant to be nested across threads.
    """

    BUCKETS = ("coarse", "fine", "build")

    def __init__(self):
        self._lock = threading.Lock()
        self.reset()

    def reset(self) -> None:
        with self._lock:
            self.coarse_evals = 0
            self.fine_evals = 0
            self.build_evals = 0
            self._active = "fine"

    def add(self, n: int, bucket: Optional[str] = None) -> None:
        if n < 0:
            raise ValueError("evaluation count cannot be negative")
        bucket = bucket or self._active
        if bucket not in self.BUCKETS:
            raise ValueError(f"unknown bucket {bucket!r}")
        with self._lock:
            setattr(self, bucket + "_evals", getattr(self, bucket + "_evals") + n)

    @contextmanager
    def counting(self, bucket: str) -> Iterator["EvalCounter"]:
        if bucket not in self.BUCKETS:
            raise ValueError(f"unknown bucket {bucket!r}")
        prev = self._active
        self._active = bucket
        try:
            yield self
        finally:
            self._active = prev

    @property
    def total(self) -> int:
        return self.coarse_evals + self.fine_evals + self.build_evals

    def snapshot(self) -> dict:
        return {
            "coarse": self.coarse_evals,
            "fine": self.fine_evals,
            "build": self.build_evals,
        }

    def __repr__(self):
        return (
            f"EvalCounter(coarse={self.coarse_evals}, fine={self.fine_evals}, "
            f"build={self.build_evals})"
        )


def _validate_coords(coords: np.ndarray, desc: DistanceDescriptor, what: str) -> None:
    if not np.isfinite(coords).all():
        raise ValueError(f"{what} has non-finite coordinates")
    # squared components, not the raw values: a tiny nonzero vector whose
    # squared norm underflows to 0.0 is a zero vector as far as the
    # kernels' normalization is concerned
    if desc.kind == "cosine" and not (coords * coords).any():
        raise ValueError(
            f"{what} has zero norm in float64, undefined under cosine distance"
        )


class Dataset:
    """A collection of points with unique ids under one distance.

    Backed by growable id/coordinate arrays so kernels see one contiguous
    float64 matrix. Removal swaps the last row into the gap, so row order
    is an implementation detail; ids are the stable handle.
    """

    def __init__(
        self,
        dimension: int,
        distance: DistanceDescriptor,
        points: Optional[Iterable[Point]] = None,
    ):
        if dimension < 0:
            raise ValueError("dimension must be non-negative")
        self.dimension = int(dimension)
        self.distance = distance
        cap = 16
        self._ids = np.empty(cap, dtype=np.int64)
        self._coords = np.empty((cap, self.dimension), dtype=np.float64)
        self._n = 0
        self._row_of: dict[int, int] = {}
        # bumped on every add/remove; caches key on it to detect staleness
        self.mutation_count = 0
        for p in points or ():
            self.add(p)

    @classmethod
    def from_arrays(
        cls, ids: np.ndarray, coords: np.ndarray, distance: DistanceDescriptor
    ) -> "Dataset":
        ids = np.asarray(ids, dtype=np.int64)
        coords = np.asarray(coords, dtype=np.float64)
        if coords.ndim != 2:
            raise ValueError(f"coords must be 2-D, got shape {coords.shape}")
        if len(ids) != len(coords):
            raise ValueError("ids and coords length mismatch")
        ds = cls(coords.shape[1], distance)
        for i in range(len(ids)):
            ds.add(Point(int(ids[i]), coords[i]))
        return ds

    def __len__(self) -> int:
        return self._n

    def __contains__(self, point_id: int) -> bool:
        return point_id in self._row_of

    @property
    def ids(self) -> np.ndarray:
        """View of the ids, aligned with ``coords`` rows. Do not mutate."""
        return self._ids[: self._n]

    @property
    def coords(self) -> np.ndarray:
        """View of the coordinate matrix. Do not mutate."""
        return self._coords[: self._n]

    def _grow(self) -> None:
        cap = max(16, 2 * self._coords.shape[0])
        ids = np.empty(cap, dtype=np.int64)
        coords = np.empty((cap, self.dimension), dtype=np.float64)
        ids[: self._n] = self._ids[: self._n]
        coords[: self._n] = self._coords[: self._n]
        self._ids = ids
        self._coords = coords

    def add(self, p: Point) -> None:
        if p.dimension != self.dimension:
            raise ValueError(
                f"point {p.id} has dimension {p.dimension}, dataset has {self.dimension}"
            )
        if p.id in self._row_of:
            raise ValueError(f"duplicate point id {p.id}")
        _validate_coords(p.coords, self.distance, f"point {p.id}")
        if self._n == self._coords.shape[0]:
            self._grow()
        self._ids[self._n] = p.id
        self._coords[self._n] = p.coords
        self._row_of[p.id] = self._n
        self._n += 1
        self.mutation_count += 1

    def remove(self, point_id: int) -> None:
        row = self._row_of.get(point_id)
        if row is None:
            raise KeyError(f"unknown point id {point_id}")
        last = self._n - 1
        if row != last:
            self._ids[row] = self._ids[last]
            self._coords[row] = self._coords[last]
            self._row_of[int(self._ids[row])] = row
        del self._row_of[point_id]
        self._n = last
        self.mutation_count += 1

    def point(self, point_id: int) -> Point:
        row = self._row_of.get(point_id)
        if row is None:
            raise KeyError(f"unknown point id {point_id}")
        return Point(point_id, self._coords[row])

    def row_of(self, point_id: int) -> int:
        row = self._row_of.get(point_id)
        if row is None:
            raise KeyError(f"unknown point id {point_id}")
        return row

    def rows_for_ids(self, ids: Iterable[int]) -> np.ndarray:
        return np.fromiter((self.row_of(i) for i in ids), dtype=np.int64)

    def points(self) -> Iterator[Point]:
        for i in range(self._n):
            yield Point(int(self._ids[i]), self._coords[i])


def _check_query(dataset: Dataset, q: Point) -> None:
    if q.dimension != dataset.dimension:
        raise ValueError(
            f"query has dimension {q.dimension}, dataset has {dataset.dimension}"
        )
    _validate_coords(q.coords, dataset.distance, "query")


def distance(
    desc: DistanceDescriptor, a: Point, b: Point, counter: Optional[EvalCounter] = None
) -> float:
    """Distance between two points, counted as one evaluation.

    Routed through the batch kernel so a pair yields the same float here
    as in any batched context.
    """
    if a.dimension != b.dimension:
        raise ValueError(f"dimension mismatch: {a.dimension} vs {b.dimension}")
    _validate_coords(a.coords, desc, f"point {a.id}")
    _validate_coords(b.coords, desc, f"point {b.id}")
    if counter is not None:
        counter.add(1)
    return float(kernels.dists(desc.code, a.coords, b.coords[None, :])[0])


def query_distances(
    dataset: Dataset, q: Point, counter: Optional[EvalCounter] = None
) -> np.ndarray:
    """Distances from ``q`` to every point, aligned with ``dataset.ids``.

    Costs exactly ``len(dataset)`` evaluations; shared plumbing for the
    brute-force oracle and the diagnostics.
    """
    _check_query(dataset, q)
    if counter is not None:
        counter.add(len(dataset))
    return kernels.dists(dataset.distance.code, q.coords, dataset.coords)


def ball(
    dataset: Dataset, q: Point, r: float, counter: Optional[EvalCounter] = None
) -> set[int]:
    """Exact range query by linear scan: {id : d(q, p) <= r}.

    The ground-truth oracle everything else is judged against. ``r`` must
    be non-negative; the boundary is inclusive.
    """
    if r < 0:
        raise ValueError(f"radius must be non-negative, got {r}")
    dm = query_distances(dataset, q, counter)
    hit = dm <= r
    return {int(i) for i in dataset.ids[hit]}
