import math
import threading

import numpy as np
import pytest

from escale.core import (
    Dataset,
    DistanceDescriptor,
    EvalCounter,
    Point,
    ball,
    distance,
    query_distances,
)

from conftest import make_dataset


class TestDistanceDescriptor:
    def test_kinds_and_metric_flags(self):
        assert DistanceDescriptor("euclidean").is_metric
        assert DistanceDescriptor("hamming").is_metric
        assert DistanceDescriptor("jaccard").is_metric
        assert not DistanceDescriptor("cosine").is_metric

    def test_rejects_unknown_kind(self):
        with pytest.raises(ValueError, match="unknown distance kind"):
            DistanceDescriptor("manhattan")

    def test_codes_are_distinct(self):
        codes = {DistanceDescriptor(k).code for k in ("euclidean", "cosine", "hamming", "jaccard")}
        assert len(codes) == 4


class TestPoint:
    def test_copies_and_coerces(self):
        raw = [1, 2, 3]
        p = Point(5, raw)
        assert p.coords.dtype == np.float64
        assert p.dimension == 3
        arr = np.array([1.0, 2.0])
        q = Point(0, arr)
        arr[0] = 99.0
        assert q.coords[0] == 1.0

    def test_rejects_bad_ids(self):
        with pytest.raises(ValueError):
            Point(-1, [1.0])
        with pytest.raises(ValueError):
            Point(1.5, [1.0])
        with pytest.raises(ValueError):
            Point(True, [1.0])

    def test_rejects_bad_shapes(self):
        with pytest.raises(ValueError):
            Point(0, [[1.0, 2.0]])


class TestDistanceFunction:
    def test_known_values(self):
        e = DistanceDescriptor("euclidean")
        assert distance(e, Point(0, [0.0, 0.0]), Point(1, [3.0, 4.0])) == 5.0
        c = DistanceDescriptor("cosine")
        assert distance(c, Point(0, [1.0, 0.0]), Point(1, [0.0, 1.0])) == 1.0
        assert distance(c, Point(0, [1.0, 2.0]), Point(1, [1.0, 2.0])) == 0.0
        h = DistanceDescriptor("hamming")
        assert distance(h, Point(0, [1.0, 2.0, 3.0]), Point(1, [1.0, 5.0, 3.0])) == 1.0
        j = DistanceDescriptor("jaccard")
        got = distance(j, Point(0, [2.0, 0.0, 1.0]), Point(1, [1.0, 3.0, 0.0]))
        assert got == pytest.approx(2.0 / 3.0)

    def test_dimension_mismatch(self):
        e = DistanceDescriptor("euclidean")
        with pytest.raises(ValueError, match="dimension mismatch"):
            distance(e, Point(0, [1.0]), Point(1, [1.0, 2.0]))

    def test_cosine_zero_vector(self):
        c = DistanceDescriptor("cosine")
        with pytest.raises(ValueError, match="zero norm"):
            distance(c, Point(0, [0.0, 0.0]), Point(1, [1.0, 2.0]))

    def test_counts_one_eval(self):
        counter = EvalCounter()
        distance(DistanceDescriptor("euclidean"), Point(0, [1.0]), Point(1, [2.0]), counter)
        assert counter.total == 1
        assert counter.fine_evals == 1  # default bucket


class TestEvalCounter:
    def test_buckets(self):
        c = EvalCounter()
        c.add(3, "coarse")
        c.add(5, "fine")
        c.add(7, "build")
        assert (c.coarse_evals, c.fine_evals, c.build_evals) == (3, 5, 7)
        assert c.total == 15
        assert c.snapshot() == {"coarse": 3, "fine": 5, "build": 7}

    def test_counting_context(self):
        c = EvalCounter()
        with c.counting("coarse"):
            c.add(2)
            with c.counting("build"):
                c.add(1)
            c.add(4)
        c.add(8)  # back to the default bucket
        assert (c.coarse_evals, c.fine_evals, c.build_evals) == (6, 8, 1)

    def test_reset(self):
        c = EvalCounter()
        c.add(5, "coarse")
        c.reset()
        assert c.total == 0

    def test_rejects_bad_input(self):
        c = EvalCounter()
        with pytest.raises(ValueError):
            c.add(-1)
        with pytest.raises(ValueError):
            c.add(1, "medium")
        with pytest.raises(ValueError):
            with c.counting("medium"):
                pass

    def test_thread_safety(self):
        c = EvalCounter()

        def work():
            for _ in range(10_000):
                c.add(1, "fine")

        threads = [threading.Thread(target=work) for _ in range(8)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert c.fine_evals == 80_000


class TestDataset:
    def test_add_point_remove(self):
        ds = Dataset(2, DistanceDescriptor("euclidean"))
        ds.add(Point(10, [1.0, 2.0]))
        ds.add(Point(3, [5.0, 6.0]))
        assert len(ds) == 2
        assert 10 in ds and 3 in ds and 7 not in ds
        assert list(ds.point(10).coords) == [1.0, 2.0]
        ds.remove(10)
        assert len(ds) == 1 and 10 not in ds
        assert list(ds.point(3).coords) == [5.0, 6.0]

    def test_duplicate_id_rejected(self):
        ds = Dataset(1, DistanceDescriptor("euclidean"))
        ds.add(Point(1, [0.0]))
        with pytest.raises(ValueError, match="duplicate"):
            ds.add(Point(1, [1.0]))

    def test_dimension_mismatch_rejected(self):
        ds = Dataset(2, DistanceDescriptor("euclidean"))
        with pytest.raises(ValueError, match="dimension"):
            ds.add(Point(0, [1.0]))

    def test_unknown_id_errors(self):
        ds = Dataset(1, DistanceDescriptor("euclidean"))
        with pytest.raises(KeyError):
            ds.remove(0)
        with pytest.raises(KeyError):
            ds.point(0)
        with pytest.raises(KeyError):
            ds.row_of(0)

    def test_cosine_zero_vector_rejected(self):
        ds = Dataset(2, DistanceDescriptor("cosine"))
        with pytest.raises(ValueError, match="zero norm"):
            ds.add(Point(0, [0.0, 0.0]))

    def test_cosine_underflowing_norm_rejected(self):
        # 1e-200 is nonzero but its square underflows to 0.0, which would
        # divide by zero inside the kernels
        ds = Dataset(2, DistanceDescriptor("cosine"))
        with pytest.raises(ValueError, match="zero norm"):
            ds.add(Point(0, [1e-200, 0.0]))
        ds.add(Point(1, [1e-150, 0.0]))  # square is subnormal but nonzero

    def test_nonfinite_rejected(self):
        ds = Dataset(2, DistanceDescriptor("euclidean"))
        with pytest.raises(ValueError, match="non-finite"):
            ds.add(Point(0, [1.0, math.nan]))
        with pytest.raises(ValueError, match="non-finite"):
            ds.add(Point(0, [math.inf, 0.0]))

    def test_growth_and_alignment(self):
        ds = Dataset(3, DistanceDescriptor("euclidean"))
        rng = np.random.default_rng(0)
        coords = rng.random((100, 3))
        for i in range(100):
            ds.add(Point(i * 2, coords[i]))
        assert len(ds) == 100
        for i in range(100):
            row = ds.row_of(i * 2)
            assert ds.ids[row] == i * 2
            assert (ds.coords[row] == coords[i]).all()

    def test_random_mutations_match_dict_model(self):
        rng = np.random.default_rng(42)
        ds = Dataset(2, DistanceDescriptor("euclidean"))
        model: dict[int, tuple] = {}
        next_id = 0
        for _ in range(600):
            if model and rng.random() < 0.4:
                pid = int(rng.choice(list(model)))
                ds.remove(pid)
                del model[pid]
            else:
                coords = rng.random(2)
                ds.add(Point(next_id, coords))
                model[next_id] = tuple(coords)
                next_id += 1
        assert len(ds) == len(model)
        assert {int(i) for i in ds.ids} == set(model)
        for pid, coords in model.items():
            assert tuple(ds.coords[ds.row_of(pid)]) == coords

    def test_mutation_count_bumps(self):
        ds = Dataset(1, DistanceDescriptor("euclidean"))
        m0 = ds.mutation_count
        ds.add(Point(0, [1.0]))
        m1 = ds.mutation_count
        ds.remove(0)
        assert m0 < m1 < ds.mutation_count

    def test_from_arrays(self):
        ids = np.array([4, 2, 9])
        coords = np.array([[1.0], [2.0], [3.0]])
        ds = Dataset.from_arrays(ids, coords, DistanceDescriptor("euclidean"))
        assert len(ds) == 3
        assert ds.point(2).coords[0] == 2.0
        with pytest.raises(ValueError, match="length mismatch"):
            Dataset.from_arrays(np.array([1]), coords, DistanceDescriptor("euclidean"))


class TestBall:
    def test_hand_worked_example(self):
        # points on a line at 0, 1, 2, 5
        ds = Dataset.from_arrays(
            np.array([0, 1, 2, 3]),
            np.array([[0.0], [1.0], [2.0], [5.0]]),
            DistanceDescriptor("euclidean"),
        )
        q = Point(99, [1.0])
        assert ball(ds, q, 0.0) == {1}
        assert ball(ds, q, 1.0) == {0, 1, 2}  # boundary inclusive
        assert ball(ds, q, 4.0) == {0, 1, 2, 3}

    def test_boundary_is_inclusive_exact(self):
        ds = Dataset.from_arrays(
            np.array([0]), np.array([[3.0, 4.0]]), DistanceDescriptor("euclidean")
        )
        assert ball(ds, Point(1, [0.0, 0.0]), 5.0) == {0}

    def test_matches_python_reference(self, rng):
        ds = make_dataset("euclidean", 200, 4, seed=11)
        q = Point(9999, rng.random(4))
        want = set()
        for i in range(200):
            d = math.sqrt(sum((ds.coords[i][j] - q.coords[j]) ** 2 for j in range(4)))
            if d <= 0.4:
                want.add(int(ds.ids[i]))
        assert ball(ds, q, 0.4) == want

    def test_counts_n_evals(self):
        ds = make_dataset("euclidean", 50, 3, seed=1)
        counter = EvalCounter()
        ball(ds, Point(9999, np.zeros(3)), 0.5, counter)
        assert counter.total == 50

    def test_rejects_negative_radius(self):
        ds = make_dataset("euclidean", 5, 2, seed=1)
        with pytest.raises(ValueError, match="non-negative"):
            ball(ds, Point(9, [0.0, 0.0]), -0.1)

    def test_rejects_bad_query(self):
        ds = make_dataset("euclidean", 5, 2, seed=1)
        with pytest.raises(ValueError, match="dimension"):
            ball(ds, Point(9, [0.0]), 0.5)
        cds = make_dataset("cosine", 5, 2, seed=1)
        with pytest.raises(ValueError, match="zero norm"):
            ball(cds, Point(9, [0.0, 0.0]), 0.5)

    def test_query_distances_alignment(self):
        ds = make_dataset("euclidean", 30, 3, seed=2)
        q = Point(9999, np.full(3, 0.5))
        dm = query_distances(ds, q)
        for i in (0, 15, 29):
            p = ds.point(int(ds.ids[i]))
            assert dm[i] == distance(ds.distance, q, p)
