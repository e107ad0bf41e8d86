"""Reading vectors from files and generating synthetic datasets.

Two file formats: CSV (optional ``id`` first column, otherwise ids are
assigned by row order) and JSON lines (one object per line with
``coords`` and optional ``id``). Parse errors name the offending line.

Synthetic generators cover the regimes the diagnostics distinguish:
``uniform_cube`` (ambient-dimension growth), ``segment`` (intrinsic
dimension one), ``gaussian_mixture`` (clumpy, optionally rounded to
non-negative integer counts for cosine work), and ``tree_cloud``
(points scattered around a random tree of line segments, low intrinsic
dimension inside a high-dimensional ambient space).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, TextIO, Union

import numpy as np

from .core import Dataset, DistanceDescriptor, Point

_EUCLIDEAN = DistanceDescriptor("euclidean")

GENERATOR_KINDS = ("uniform_cube", "segment", "gaussian_mixture", "tree_cloud")

_PARAM_DEFAULTS: dict[str, dict[str, float]] = {
    "uniform_cube": {"extent": 1.0},
    "segment": {"length": 1.0, "width": 0.0},
    "gaussian_mixture": {
        "components": 8,
        "spread": 0.05,
        "extent": 1.0,
        "integer_counts": 0,
    },
    "tree_cloud": {"branches": 16, "branch_length": 1.0, "noise": 0.01},
}


@dataclass(frozen=True)
class GeneratorSpec:
    """Recipe for a synthetic dataset: kind, size, seed, and knobs.

    ``params`` is validated against the kind's known knobs at generation
    time; see ``_PARAM_DEFAULTS`` for each kind's defaults.
    """

    kind: str
    dimension: int
    n: int
    seed: int = 0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in GENERATOR_KINDS:
            raise ValueError(
                f"unknown generator kind {self.kind!r}, expected one of {GENERATOR_KINDS}"
            )
        if self.dimension <= 0:
            raise ValueError(f"dimension must be positive, got {self.dimension}")
        if self.n < 0:
            raise ValueError(f"n must be non-negative, got {self.n}")
        unknown = set(self.params) - set(_PARAM_DEFAULTS[self.kind])
        if unknown:
            raise ValueError(
                f"unknown parameters for {self.kind}: {sorted(unknown)}; "
                f"valid: {sorted(_PARAM_DEFAULTS[self.kind])}"
            )

    def param(self, name: str) -> float:
        return float(self.params.get(name, _PARAM_DEFAULTS[self.kind][name]))

    @classmethod
    def parse(cls, text: str) -> "GeneratorSpec":
        """Parse ``kind:dim=D,n=N[,seed=S,key=value,...]`` (CLI syntax)."""
        kind, sep, rest = text.partition(":")
        kind = kind.strip()
        if not sep or not rest.strip():
            raise ValueError(
                f"bad generator spec {text!r}: expected kind:dim=...,n=...[,key=value]"
            )
        fields: dict[str, float] = {}
        for item in rest.split(","):
            key, sep2, value = item.partition("=")
            key = key.strip()
            if not sep2 or not key:
                raise ValueError(f"bad generator spec item {item!r}: expected key=value")
            try:
                fields[key] = float(value)
            except ValueError:
                raise ValueError(f"bad generator spec value for {key!r}: {value!r}") from None
        dim = fields.pop("dim", None)
        n = fields.pop("n", None)
        if dim is None or n is None:
            raise ValueError(f"generator spec {text!r} must include dim= and n=")
        seed = int(fields.pop("seed", 0))
        return cls(kind, int(dim), int(n), seed, fields)


def generate(spec: GeneratorSpec, distance: DistanceDescriptor = _EUCLIDEAN) -> Dataset:
    """Materialize a synthetic dataset, ids 0..n-1, seeded by PCG64."""
    rng = np.random.default_rng(spec.seed)
    n, dim = spec.n, spec.dimension

    if spec.kind == "uniform_cube":
        coords = rng.random((n, dim)) * spec.param("extent")
    elif spec.kind == "segment":
        coords = np.zeros((n, dim))
        coords[:, 0] = rng.random(n) * spec.param("length")
        width = spec.param("width")
        if width > 0:
            coords = coords + rng.normal(0.0, width, (n, dim))
    elif spec.kind == "gaussian_mixture":
        comps = int(spec.param("components"))
        if comps <= 0:
            raise ValueError(f"components must be positive, got {comps}")
        means = rng.random((comps, dim)) * spec.param("extent")
        choice = rng.integers(0, comps, n)
        coords = means[choice] + rng.normal(0.0, spec.param("spread"), (n, dim))
        if spec.param("integer_counts"):
            coords = np.clip(np.rint(coords), 0.0, None)
            # a rounded-away-to-zero row would be illegal under cosine
            dead = ~coords.any(axis=1)
            coords[dead, 0] = 1.0
    else:  # tree_cloud
        branches = int(spec.param("branches"))
        if branches <= 0:
            raise ValueError(f"branches must be positive, got {branches}")
        length = spec.param("branch_length")
        nodes = np.zeros((branches + 1, dim))
        seg_a = np.empty((branches, dim))
        seg_b = np.empty((branches, dim))
        for b in range(branches):
            parent = nodes[rng.integers(0, b + 1)]
            direction = rng.normal(size=dim)
            direction /= np.sqrt((direction * direction).sum())
            child = parent + length * direction
            seg_a[b] = parent
            seg_b[b] = child
            nodes[b + 1] = child
        which = rng.integers(0, branches, n)
        t = rng.random((n, 1))
        base = seg_a[which] + t * (seg_b[which] - seg_a[which])
        coords = base + rng.normal(0.0, spec.param("noise"), (n, dim))

    ids = np.arange(n, dtype=np.int64)
    return Dataset.from_arrays(ids, coords, distance)


def _open_maybe(path_or_file: Union[str, Path, TextIO], mode: str):
    if isinstance(path_or_file, (str, Path)):
        return open(path_or_file, mode, newline=""), True
    return path_or_file, False


def parse_vectors(
    source: Union[str, Path, TextIO],
    format: str = "csv",
    distance: DistanceDescriptor = _EUCLIDEAN,
) -> Dataset:
    """Parse a vector file into a dataset.

    CSV: an optional header row; if the first column is named ``id`` it
    supplies point ids, otherwise ids follow row order. JSONL: one
    object per line, ``{"coords": [...]}`` with optional ``"id"``; the
    first record decides whether ids come from the file. Empty input
    yields an empty zero-dimension dataset.
    """
    if format not in ("csv", "jsonl"):
        raise ValueError(f"unknown format {format!r}, expected csv or jsonl")
    f, owns = _open_maybe(source, "r")
    try:
        if format == "csv":
            ids, rows, lines = _parse_csv(f)
        else:
            ids, rows, lines = _parse_jsonl(f)
    finally:
        if owns:
            f.close()
    if not rows:
        return Dataset(0, distance)
    dim = len(rows[0])
    ds = Dataset(dim, distance)
    for pid, row, ln in zip(ids, rows, lines):
        try:
            ds.add(Point(pid, np.asarray(row, dtype=np.float64)))
        except ValueError as e:
            raise ValueError(f"line {ln}: {e}") from None
    return ds


def _parse_csv(f: TextIO) -> tuple[list[int], list[list[float]], list[int]]:
    reader = csv.reader(f)
    ids: list[int] = []
    rows: list[list[float]] = []
    lines: list[int] = []
    has_id: Optional[bool] = None
    dim: Optional[int] = None
    auto = 0
    for ln, rec in enumerate(reader, start=1):
        if not rec or all(not c.strip() for c in rec):
            continue
        cells = [c.strip() for c in rec]
        if has_id is None:
            # first data-bearing row decides the shape; a non-numeric
            # first row is a header
            if any(not _is_number(c) for c in cells):
                has_id = cells[0].lower() == "id"
                continue
            has_id = False
        if has_id:
            if len(cells) < 2:
                raise ValueError(f"line {ln}: expected id plus coordinates")
            try:
                pid = int(cells[0])
            except ValueError:
                raise ValueError(f"line {ln}: bad id {cells[0]!r}") from None
            vals = cells[1:]
        else:
            pid = auto
            auto += 1
            vals = cells
        if dim is None:
            dim = len(vals)
        elif len(vals) != dim:
            raise ValueError(f"line {ln}: expected {dim} coordinates, got {len(vals)}")
        try:
            row = [float(v) for v in vals]
        except ValueError:
            bad = next(v for v in vals if not _is_number(v))
            raise ValueError(f"line {ln}: bad number {bad!r}") from None
        ids.append(pid)
        rows.append(row)
        lines.append(ln)
    return ids, rows, lines


def _is_number(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


def _parse_jsonl(f: TextIO) -> tuple[list[int], list[list[float]], list[int]]:
    ids: list[int] = []
    rows: list[list[float]] = []
    lines: list[int] = []
    has_id: Optional[bool] = None
    dim: Optional[int] = None
    auto = 0
    for ln, raw in enumerate(f, start=1):
        if not raw.strip():
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as e:
            raise ValueError(f"line {ln}: bad JSON ({e.msg})") from None
        if not isinstance(obj, dict) or "coords" not in obj:
            raise ValueError(f'line {ln}: expected an object with a "coords" field')
        coords = obj["coords"]
        if not isinstance(coords, list) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in coords
        ):
            raise ValueError(f'line {ln}: "coords" must be a list of numbers')
        if has_id is None:
            has_id = "id" in obj
        if has_id != ("id" in obj):
            raise ValueError(f'line {ln}: inconsistent presence of the "id" field')
        if has_id:
            pid = obj["id"]
            if not isinstance(pid, int) or isinstance(pid, bool):
                raise ValueError(f'line {ln}: "id" must be an integer')
        else:
            pid = auto
            auto += 1
        if dim is None:
            dim = len(coords)
        elif len(coords) != dim:
            raise ValueError(f"line {ln}: expected {dim} coordinates, got {len(coords)}")
        ids.append(pid)
        rows.append([float(v) for v in coords])
        lines.append(ln)
    return ids, rows, lines


def export_vectors(
    dataset: Dataset, target: Union[str, Path, TextIO], format: str = "csv"
) -> None:
    """Write a dataset back out in a form ``parse_vectors`` round-trips.

    Floats are rendered with ``repr``, which is shortest-round-trip in
    Python 3, so parse(export(ds)) reproduces coordinates bit-exactly.
    """
    if format not in ("csv", "jsonl"):
        raise ValueError(f"unknown format {format!r}, expected csv or jsonl")
    f, owns = _open_maybe(target, "w")
    try:
        if format == "csv":
            writer = csv.writer(f)
            writer.writerow(["id"] + [f"c{j}" for j in range(dataset.dimension)])
            for i in range(len(dataset)):
                writer.writerow(
                    [int(dataset.ids[i])] + [repr(float(v)) for v in dataset.coords[i]]
                )
        else:
            for i in range(len(dataset)):
                f.write(
                    json.dumps(
                        {
                            "id": int(dataset.ids[i]),
                            "coords": [float(v) for v in dataset.coords[i]],
                        }
                    )
                    + "\n"
                )
    finally:
        if owns:
            f.close()
