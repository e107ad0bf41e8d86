"""Search semantics: oracle agreement, accounting, staleness, ordering."""

import numpy as np
import pytest

from escale.clustering import build
from escale.core import Dataset, DistanceDescriptor, EvalCounter, Point, ball, query_distances
from escale.search import coarse_search, fine_search, search

from conftest import make_dataset

CASES = [("euclidean", 0.3, 0.25), ("hamming", 2.0, 1.0), ("jaccard", 0.35, 0.3)]


@pytest.mark.parametrize("kind,r_c,r", CASES)
def test_metric_search_equals_oracle(kind, r_c, r):
    ds = make_dataset(kind, 400, 6, seed=17)
    db = build(ds, r_c, seed=3)
    rng = np.random.default_rng(5)
    for trial in range(25):
        if trial % 2 == 0:
            q = ds.point(int(rng.choice(ds.ids)))
        else:
            q = Point(10_000 + trial, make_dataset(kind, 1, 6, seed=100 + trial).coords[0])
        result = search(db, q, r)
        assert {pid for pid, _ in result.hits} == ball(ds, q, r)


def test_hit_distances_are_true_distances():
    ds = make_dataset("euclidean", 200, 4, seed=23)
    db = build(ds, 0.3, seed=0)
    q = Point(9_999, np.full(4, 0.4))
    result = search(db, q, 0.35)
    dm = query_distances(ds, q)
    assert result.hits  # parameters chosen so the ball is populated
    for pid, dist in result.hits:
        assert dist == dm[ds.row_of(pid)]
        assert dist <= 0.35


def test_hits_sorted_by_distance_then_id():
    # duplicated coordinates give distance ties
    coords = np.array([[0.0], [1.0], [1.0], [2.0], [1.0]])
    ds = Dataset.from_arrays(np.array([4, 8, 2, 9, 6]), coords, DistanceDescriptor("euclidean"))
    db = build(ds, 10.0, seed=0)
    result = search(db, Point(100, [0.0]), 5.0)
    assert result.hits == [(4, 0.0), (2, 1.0), (6, 1.0), (8, 1.0), (9, 2.0)]
    unsorted = search(db, Point(100, [0.0]), 5.0, sort_hits=False)
    assert sorted(unsorted.hits, key=lambda h: (h[1], h[0])) == result.hits


def test_radius_zero_and_boundary():
    coords = np.array([[0.0, 0.0], [3.0, 4.0], [6.0, 8.0]])
    ds = Dataset.from_arrays(np.array([0, 1, 2]), coords, DistanceDescriptor("euclidean"))
    db = build(ds, 1.0, seed=0)
    assert [h[0] for h in search(db, Point(5, [0.0, 0.0]), 0.0).hits] == [0]
    hits5 = {h[0] for h in search(db, Point(5, [0.0, 0.0]), 5.0).hits}
    assert hits5 == {0, 1}  # the 3-4-5 point lands exactly on the boundary


def test_coarse_search_accounting_and_order():
    ds = make_dataset("euclidean", 300, 5, seed=31)
    db = build(ds, 0.3, seed=2)
    counter = EvalCounter()
    cand = coarse_search(db, Point(7_777, np.full(5, 0.5)), 0.2, counter)
    assert counter.coarse_evals == db.k
    assert counter.fine_evals == 0
    assert cand.cluster_ids == sorted(cand.cluster_ids)
    assert cand.total_members == sum(len(db.clusters[ci]) for ci in cand.cluster_ids)


def test_coarse_threshold_inclusive():
    # centers pinned by construction: 0 and exactly r + r_c away
    ds = Dataset.from_arrays(
        np.array([0, 1]), np.array([[0.0], [3.0]]), DistanceDescriptor("euclidean")
    )
    db = build(ds, 1.0, seed=0)
    assert db.k == 2
    cand = coarse_search(db, Point(9, [0.0]), 2.0)  # r + r_c = 3.0 on the nose
    assert cand.cluster_ids == [0, 1]


def test_no_true_hit_outside_candidates():
    ds = make_dataset("euclidean", 350, 4, seed=37)
    db = build(ds, 0.25, seed=5)
    q = Point(8_888, np.full(4, 0.3))
    cand = coarse_search(db, q, 0.2)
    member_union = set()
    for ci in cand.cluster_ids:
        member_union |= db.clusters[ci].member_ids
    assert ball(ds, q, 0.2) <= member_union


def test_fine_search_accounting():
    ds = make_dataset("euclidean", 300, 5, seed=41)
    db = build(ds, 0.35, seed=1)
    q = Point(5_555, np.full(5, 0.5))
    counter = EvalCounter()
    cand = coarse_search(db, q, 0.25, counter)
    result = fine_search(db, cand, q, 0.25, counter)
    assert counter.fine_evals == cand.total_members
    assert result.stats.fine_evals == cand.total_members
    assert result.stats.coarse_evals == db.k
    assert result.stats.clusters_scanned == len(cand.cluster_ids)
    assert result.stats.candidate_fraction == cand.total_members / len(ds)


def test_search_total_cost():
    ds = make_dataset("euclidean", 300, 5, seed=43)
    db = build(ds, 0.35, seed=1)
    counter = EvalCounter()
    result = search(db, Point(1_234, np.full(5, 0.5)), 0.2, counter)
    assert counter.coarse_evals == db.k
    assert counter.fine_evals == result.stats.fine_evals
    assert counter.build_evals == 0


def test_stale_candidates_rejected():
    ds = make_dataset("euclidean", 100, 3, seed=47)
    db = build(ds, 0.4, seed=1)
    q = Point(2_000, np.full(3, 0.5))
    cand = coarse_search(db, q, 0.2)
    db.insert(Point(3_000, np.full(3, 0.51)))
    with pytest.raises(ValueError, match="stale"):
        fine_search(db, cand, q, 0.2)

    cand2 = coarse_search(db, q, 0.2)
    db.delete(3_000)
    with pytest.raises(ValueError, match="stale"):
        fine_search(db, cand2, q, 0.2)


def test_candidates_bound_to_their_database():
    db1 = build(make_dataset("euclidean", 50, 3, seed=1), 0.4, seed=1)
    db2 = build(make_dataset("euclidean", 50, 3, seed=2), 0.4, seed=1)
    q = Point(999, np.full(3, 0.5))
    cand = coarse_search(db1, q, 0.2)
    with pytest.raises(ValueError, match="different database"):
        fine_search(db2, cand, q, 0.2)


def test_search_after_mutations_still_exact():
    ds = make_dataset("euclidean", 200, 3, seed=53)
    db = build(ds, 0.3, seed=7)
    rng = np.random.default_rng(8)
    for i in range(60):
        db.insert(Point(10_000 + i, rng.random(3)))
    for pid in sorted(int(i) for i in ds.ids)[:40]:
        db.delete(pid)
    q = Point(99_999, np.full(3, 0.5))
    for r in (0.05, 0.2, 0.45):
        assert {p for p, _ in search(db, q, r).hits} == ball(db.dataset, q, r)


def test_empty_database():
    db = build(Dataset(2, DistanceDescriptor("euclidean")), 0.5, seed=0)
    result = search(db, Point(0, [1.0, 2.0]), 0.5)
    assert result.hits == []
    assert result.stats.candidate_fraction == 0.0
    assert result.stats.coarse_evals == 0
    assert result.stats.fine_evals == 0
    assert result.stats.clusters_scanned == 0


def test_single_cluster_scans_everything():
    ds = make_dataset("euclidean", 80, 3, seed=59)
    db = build(ds, 100.0, seed=0)
    assert db.k == 1
    counter = EvalCounter()
    search(db, Point(500, np.full(3, 0.5)), 0.1, counter)
    assert counter.fine_evals == len(ds)


def test_argument_validation():
    db = build(make_dataset("euclidean", 30, 2, seed=61), 0.4, seed=0)
    q = Point(100, [0.5, 0.5])
    with pytest.raises(ValueError, match="non-negative"):
        search(db, q, -1.0)
    with pytest.raises(ValueError, match="dimension"):
        search(db, Point(100, [0.5]), 0.1)
    with pytest.raises(ValueError, match="positive"):
        search(db, q, 0.1, coarse_scale=0.0)
    cdb = build(make_dataset("cosine", 30, 2, seed=61), 0.1, seed=0)
    with pytest.raises(ValueError, match="zero norm"):
        search(cdb, Point(100, [0.0, 0.0]), 0.1)


def test_narrowed_coarse_scale_stays_subset():
    ds = make_dataset("euclidean", 300, 4, seed=67)
    db = build(ds, 0.3, seed=3)
    q = Point(4_444, np.full(4, 0.5))
    full = {p for p, _ in search(db, q, 0.25).hits}
    narrowed = {p for p, _ in search(db, q, 0.25, coarse_scale=0.5).hits}
    assert narrowed <= full


def test_cosine_search_never_false_positive():
    ds = make_dataset("cosine", 300, 8, seed=71)
    db = build(ds, 0.15, seed=9)
    rng = np.random.default_rng(10)
    for _ in range(10):
        q = Point(6_000, rng.random(8) + 0.05)
        result = search(db, q, 0.1)
        truth = ball(ds, q, 0.1)
        found = {p for p, _ in result.hits}
        assert found <= truth  # misses possible, fabrications never
