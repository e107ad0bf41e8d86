"""Command-line interface.

Four subcommands: ``build`` (cluster a dataset and write a store),
``query`` (range search against a store), ``stats`` (scaling
diagnostics for a store), and ``bench`` (clustered search versus naive
scan over a radius/cluster-radius grid, CSV out).

Results go to stdout, logs and per-query statistics to stderr. Exit
codes: 0 success, 1 operational failure (missing file, corrupt store,
dimension mismatch), 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .analysis import fractal_profile, predicted_speedup, triangle_violation_rate
from .clustering import build
from .core import Dataset, DistanceDescriptor, EvalCounter, Point
from .ingest import GeneratorSpec, generate, parse_vectors
from .search import search
from .storage import CompressedStore, StorageError, read_database, write_database

KIND_CHOICES = ("euclidean", "cosine", "hamming", "jaccard")


def _float_list(text: str, what: str, parser: argparse.ArgumentParser) -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        parser.error(f"bad {what} {text!r}: expected comma-separated numbers")
    if not values:
        parser.error(f"bad {what} {text!r}: empty list")
    return values


def _add_dataset_args(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", help="vector file to read")
    src.add_argument(
        "--generate",
        help="synthetic dataset spec, e.g. uniform_cube:dim=8,n=10000,seed=1",
    )
    p.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    p.add_argument("--distance", choices=KIND_CHOICES, default="euclidean")


def _load_dataset(args: argparse.Namespace) -> Dataset:
    desc = DistanceDescriptor(args.distance)
    if args.generate:
        return generate(GeneratorSpec.parse(args.generate), desc)
    return parse_vectors(args.input, args.format, desc)


def _nonneg(value: str, what: str, parser: argparse.ArgumentParser) -> float:
    try:
        v = float(value)
    except ValueError:
        parser.error(f"{what} must be a number, got {value!r}")
    if v < 0:
        parser.error(f"{what} must be non-negative, got {v}")
    return v


def cmd_build(args, parser) -> int:
    rc = _nonneg(args.rc, "--rc", parser)
    dataset = _load_dataset(args)
    t0 = time.perf_counter()
    db = build(dataset, rc, seed=args.seed)
    build_seconds = time.perf_counter() - t0
    stats = write_database(db, args.output)
    print(f"n {len(dataset)}")
    print(f"k {db.k}")
    speedup = predicted_speedup(db) if db.k else float("nan")
    print(f"predicted_speedup {speedup!r}")
    print(f"build_seconds {build_seconds:.3f}")
    print(f"file_bytes {stats.file_bytes}")
    print(f"compression_ratio {stats.ratio:.4f}")
    return 0


def _queries_from_args(args, parser) -> list[Point]:
    if args.query is not None:
        coords = _float_list(args.query, "--query", parser)
        return [Point(0, np.asarray(coords))]
    ds = parse_vectors(args.query_file, args.format, DistanceDescriptor("euclidean"))
    if len(ds) == 0:
        parser.error(f"query file {args.query_file} holds no vectors")
    return [ds.point(int(i)) for i in ds.ids]


def cmd_query(args, parser) -> int:
    radius = _nonneg(args.radius, "--radius", parser)
    with CompressedStore(args.store) as store:
        queries = _queries_from_args(args, parser)
        for qp in queries:
            counter = EvalCounter()
            result = store.search(qp, radius, counter)
            for pid, dist in result.hits:
                print(f"{pid} {dist!r}")
            s = result.stats
            print(
                f"# query {qp.id}: hits={len(result.hits)} coarse_evals={s.coarse_evals} "
                f"fine_evals={s.fine_evals} clusters_scanned={s.clusters_scanned} "
                f"candidate_fraction={s.candidate_fraction:.6g}",
                file=sys.stderr,
            )
    return 0


def cmd_stats(args, parser) -> int:
    grid = _float_list(args.grid, "--grid", parser)
    if len(grid) < 2 or grid[0] <= 0 or any(b <= a for a, b in zip(grid, grid[1:])):
        parser.error("--grid must be positive and strictly increasing, with >= 2 entries")
    db = read_database(args.store)
    n, k = len(db.dataset), db.k
    print(f"n {n}")
    print(f"k {k}")
    print(f"n_over_k {n / k if k else float('nan')!r}")
    print(f"distance {db.dataset.distance.kind}")
    print(f"dimension {db.dataset.dimension}")
    print(f"r_c {db.r_c!r}")
    profile = fractal_profile(db.dataset, args.samples, grid, seed=args.seed)
    for j in range(len(grid) - 1):
        print(f"fractal {grid[j]!r} {grid[j + 1]!r} {float(profile.mean_dims[j])!r}")
    if args.alpha is not None:
        triples = None if args.alpha == "exhaustive" else int(args.alpha)
        report = triangle_violation_rate(db.dataset, triples, seed=args.seed)
        print(f"alpha {report.alpha!r}")
        print(f"alpha_triples {report.triples_checked}")
    return 0


def _bench_cell(db, qp: Point, r: float, repeats: int) -> dict:
    dataset = db.dataset
    code = dataset.distance.code
    counter = EvalCounter()
    result = search(db, qp, r, counter, sort_hits=False)
    found = {pid for pid, _ in result.hits}
    truth_dm = kernels.dists(code, qp.coords, dataset.coords)
    truth = {int(i) for i in dataset.ids[truth_dm <= r]}
    recall = len(found & truth) / len(truth) if truth else 1.0

    naive_t = 0.0
    for _ in range(repeats):
        t0 = time.perf_counter()
        dm = kernels.dists(code, qp.coords, dataset.coords)
        _ = dataset.ids[dm <= r]
        naive_t += time.perf_counter() - t0
    accel_t = 0.0
    for _ in range(repeats):
        t0 = time.perf_counter()
        search(db, qp, r, sort_hits=False)
        accel_t += time.perf_counter() - t0

    cost = counter.coarse_evals + counter.fine_evals
    return {
        "query_id": qp.id,
        "r": r,
        "r_c": db.r_c,
        "naive_evals": len(dataset),
        "coarse_evals": counter.coarse_evals,
        "fine_evals": counter.fine_evals,
        "acceleration": len(dataset) / cost if cost else float("nan"),
        "recall": recall,
        "naive_seconds": naive_t / repeats,
        "accel_seconds": accel_t / repeats,
    }


_BENCH_COLUMNS = (
    "query_id",
    "r",
    "r_c",
    "naive_evals",
    "coarse_evals",
    "fine_evals",
    "acceleration",
    "recall",
    "naive_seconds",
    "accel_seconds",
)


def cmd_bench(args, parser) -> int:
    radii = _float_list(args.radius, "--radius", parser)
    rcs = _float_list(args.rc, "--rc", parser)
    if any(r < 0 for r in radii) or any(rc < 0 for rc in rcs):
        parser.error("--radius and --rc values must be non-negative")
    if args.repeats <= 0:
        parser.error("--repeats must be positive")
    dataset = _load_dataset(args)
    if len(dataset) == 0:
        parser.error("benchmark needs a non-empty dataset")
    if args.threads is not None:
        threads = args.threads
    else:
        try:
            threads = int(os.environ.get("ESCALE_THREADS", "1"))
        except ValueError:
            parser.error("ESCALE_THREADS must be an integer")
    if threads <= 0:
        parser.error("--threads must be positive")

    rng = np.random.default_rng(args.seed)
    m = min(args.queries, len(dataset))
    if m <= 0:
        parser.error("--queries must be positive")
    rows_sel = rng.choice(len(dataset), size=m, replace=False)
    qids = sorted(int(dataset.ids[i]) for i in rows_sel)
    queries = [dataset.point(pid) for pid in qids]

    out_rows: list[dict] = []
    for rc in sorted(rcs):
        t0 = time.perf_counter()
        db = build(dataset, rc, seed=args.seed)
        print(
            f"built r_c={rc}: k={db.k} in {time.perf_counter() - t0:.2f}s",
            file=sys.stderr,
        )
        cells = [(qp, r) for r in sorted(radii) for qp in queries]
        # warm pass: fills cluster row caches so timing measures search,
        # not first-touch gathering
        for qp, r in cells:
            search(db, qp, r, sort_hits=False)
        if threads == 1:
            results = [_bench_cell(db, qp, r, args.repeats) for qp, r in cells]
        else:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = list(
                    pool.map(lambda cell: _bench_cell(db, cell[0], cell[1], args.repeats), cells)
                )
        out_rows.extend(results)

    out_rows.sort(key=lambda row: (row["r_c"], row["r"], row["query_id"]))
    out = open(args.output, "w", newline="") if args.output else sys.stdout
    try:
        source = args.generate if args.generate else args.input
        out.write(
            f"# source={source} distance={args.distance} seed={args.seed} "
            f"repeats={args.repeats} queries={','.join(str(q) for q in qids)}\n"
        )
        writer = csv.DictWriter(out, fieldnames=_BENCH_COLUMNS)
        writer.writeheader()
        for row in out_rows:
            writer.writerow({c: _render(row[c]) for c in _BENCH_COLUMNS})
    finally:
        if args.output:
            out.close()
    return 0


def _render(v) -> str:
    if isinstance(v, float):
        return f"{v:.9g}"
    return str(v)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="escale",
        description="Cluster-accelerated exact range search over dense vectors.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="cluster a dataset and write a store file")
    _add_dataset_args(p)
    p.add_argument("--rc", required=True, help="cluster radius")
    p.add_argument("--seed", type=int, default=0, help="build permutation seed")
    p.add_argument("--output", required=True, help="store file to write")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("query", help="range search against a store file")
    p.add_argument("--store", required=True, help="store file to search")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--query", help="comma-separated query coordinates")
    src.add_argument("--query-file", help="file of query vectors")
    p.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    p.add_argument("--radius", required=True, help="search radius")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("stats", help="scaling diagnostics for a store file")
    p.add_argument("--store", required=True, help="store file to profile")
    p.add_argument("--grid", required=True, help="comma-separated radius grid")
    p.add_argument("--samples", type=int, default=200, help="sample points for the profile")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--alpha",
        nargs="?",
        const="exhaustive",
        default=None,
        help="measure triangle violations: a triple count, or exhaustive when omitted",
    )
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("bench", help="clustered search vs naive scan, CSV to stdout")
    _add_dataset_args(p)
    p.add_argument("--rc", required=True, help="comma-separated cluster radii")
    p.add_argument("--radius", required=True, help="comma-separated search radii")
    p.add_argument("--queries", type=int, default=10, help="number of sampled query points")
    p.add_argument("--repeats", type=int, default=5, help="timing repetitions per cell")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--threads",
        type=int,
        default=None,
        help="benchmark worker threads (default: ESCALE_THREADS or 1)",
    )
    p.add_argument("--output", default=None, help="CSV path (default stdout)")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, parser)
    except (OSError, ValueError, KeyError, StorageError) as e:
        print(f"escale: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
