"""Compressed on-disk stores, searchable without full decompression.

Layout (all integers little-endian, coordinates raw float64):

* header, 48 bytes: magic ``ESDB``, format version, codec byte, distance
  kind code, dimension, r_c, k, n, permutation seed, CRC32 of the
  preceding 44 bytes
* centers region, uncompressed: k center point ids (int64) then the
  k x dimension center coordinate matrix; resident so the coarse stage
  never touches a compressed block
* index region: k fixed 48-byte entries locating each cluster's block
* k per-cluster blocks, each independently compressed: member ids
  (ascending), center distances, then member coordinates row-major

Per-cluster blocks are the load unit: a search decompresses exactly the
clusters that survive the coarse stage. The codec byte names the
compressor (1 = zlib, the only one currently registered) so the format
can grow alternatives without a version bump.
"""

from __future__ import annotations

import os
import struct
import tempfile
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Optional, Union

import numpy as np

from . import kernels
from .clustering import ClusteredDatabase
from .core import Dataset, DistanceDescriptor, EvalCounter, Point, _validate_coords
from .search import QueryResult, SearchStats

MAGIC = b"ESDB"
VERSION = 1

_HEADER_BODY = struct.Struct("<4sHBBIdQQq")  # 44 bytes
_CRC = struct.Struct("<I")
HEADER_SIZE = _HEADER_BODY.size + _CRC.size

_INDEX_ENTRY = struct.Struct("<IIQQQqII")  # 48 bytes
INDEX_ENTRY_SIZE = _INDEX_ENTRY.size

_KIND_BY_CODE = {
    kernels.EUCLIDEAN: "euclidean",
    kernels.COSINE: "cosine",
    kernels.HAMMING: "hamming",
    kernels.JACCARD: "jaccard",
}

_CODECS = {1: ("zlib", zlib.compress, zlib.decompress)}
_CODEC_IDS = {name: cid for cid, (name, _, _) in _CODECS.items()}


class StorageError(Exception):
    """Corrupt, truncated, or incompatible store file."""


@dataclass(frozen=True)
class StoreHeader:
    version: int
    codec: str
    distance: DistanceDescriptor
    dimension: int
    r_c: float
    k: int
    n: int
    permutation_seed: int


@dataclass(frozen=True)
class ClusterIndexEntry:
    """Where one cluster's block lives and how to verify it."""

    cluster_id: int
    center_id: int
    byte_offset: int
    byte_length: int
    member_count: int
    checksum: int


@dataclass(frozen=True)
class CompressionStats:
    """Size accounting for one written store.

    ``point_bytes`` is the uncompressed baseline (ids plus coordinates
    for every point); ``ratio`` is point_bytes / file_bytes, so values
    above 1 mean the store undercuts raw storage despite carrying the
    cluster structure. Defined as 1.0 for an empty store.
    """

    n_points: int
    dimension: int
    point_bytes: int
    block_bytes: int
    overhead_bytes: int
    file_bytes: int
    ratio: float


@dataclass(frozen=True)
class StoredCluster:
    cluster_id: int
    center_id: int
    member_ids: np.ndarray
    center_dists: np.ndarray
    coords: np.ndarray


def _pack_header(db: ClusteredDatabase, codec_id: int) -> bytes:
    body = _HEADER_BODY.pack(
        MAGIC,
        VERSION,
        codec_id,
        db.dataset.distance.code,
        db.dataset.dimension,
        db.r_c,
        db.k,
        len(db.dataset),
        db.permutation_seed,
    )
    return body + _CRC.pack(zlib.crc32(body))


def write_database(
    db: ClusteredDatabase, path: Union[str, Path], codec: str = "zlib"
) -> CompressionStats:
    """Serialize a clustered database, atomically.

    The file appears under ``path`` only after a complete successful
    write (temp file plus rename), so readers never observe a partial
    store.
    """
    if codec not in _CODEC_IDS:
        raise ValueError(f"unknown codec {codec!r}, expected one of {sorted(_CODEC_IDS)}")
    codec_id = _CODEC_IDS[codec]
    compress = _CODECS[codec_id][1]
    path = Path(path)
    dataset = db.dataset
    dim = dataset.dimension
    k = db.k

    blocks: list[bytes] = []
    crcs: list[int] = []
    counts: list[int] = []
    for cluster in db.clusters:
        ids, rows = cluster.member_rows(dataset)
        dists = np.array([cluster.center_distance(int(i)) for i in ids], dtype=np.float64)
        payload = ids.tobytes() + dists.tobytes() + np.ascontiguousarray(rows).tobytes()
        comp = compress(payload)
        blocks.append(comp)
        crcs.append(zlib.crc32(comp))
        counts.append(len(ids))

    centers_bytes = (
        np.ascontiguousarray(db.center_ids, dtype=np.int64).tobytes()
        + np.ascontiguousarray(db.center_coords).tobytes()
    )
    data_start = HEADER_SIZE + len(centers_bytes) + k * INDEX_ENTRY_SIZE
    index_parts: list[bytes] = []
    offset = data_start
    for ci in range(k):
        index_parts.append(
            _INDEX_ENTRY.pack(
                ci,
                0,
                offset,
                len(blocks[ci]),
                counts[ci],
                db.clusters[ci].center_id,
                crcs[ci],
                0,
            )
        )
        offset += len(blocks[ci])

    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(_pack_header(db, codec_id))
            f.write(centers_bytes)
            f.write(b"".join(index_parts))
            for comp in blocks:
                f.write(comp)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise

    n = len(dataset)
    point_bytes = n * (8 + 8 * dim)
    block_bytes = sum(len(b) for b in blocks)
    overhead = HEADER_SIZE + len(centers_bytes) + k * INDEX_ENTRY_SIZE
    file_bytes = overhead + block_bytes
    ratio = (point_bytes / file_bytes) if n else 1.0
    return CompressionStats(n, dim, point_bytes, block_bytes, overhead, file_bytes, ratio)


class CompressedStore:
    """Reader for a written store; loads cluster blocks on demand.

    ``load_log`` records every cluster block decompressed, in order, so
    tests and benchmarks can audit which parts of the file a search
    touched. Accepts a path or a seekable binary file object.
    """

    def __init__(self, source: Union[str, Path, BinaryIO]):
        if isinstance(source, (str, Path)):
            self._f: BinaryIO = open(source, "rb")
            self._owns = True
        else:
            self._f = source
            self._owns = False
        self.load_log: list[int] = []
        try:
            self._read_preamble()
        except BaseException:
            if self._owns:
                self._f.close()
            raise

    def _read_exact(self, size: int, what: str) -> bytes:
        buf = self._f.read(size)
        if len(buf) != size:
            raise StorageError(f"truncated store: short read in {what}")
        return buf

    def _read_preamble(self) -> None:
        self._f.seek(0)
        raw = self._read_exact(HEADER_SIZE, "header")
        body, (crc,) = raw[: _HEADER_BODY.size], _CRC.unpack(raw[_HEADER_BODY.size :])
        if zlib.crc32(body) != crc:
            raise StorageError("header checksum mismatch")
        magic, version, codec_id, kind_code, dim, r_c, k, n, seed = _HEADER_BODY.unpack(body)
        if magic != MAGIC:
            raise StorageError(f"bad magic {magic!r}, not a store file")
        if version != VERSION:
            raise StorageError(f"unsupported format version {version}")
        if codec_id not in _CODECS:
            raise StorageError(f"unknown codec id {codec_id}")
        if kind_code not in _KIND_BY_CODE:
            raise StorageError(f"unknown distance code {kind_code}")
        self._decompress = _CODECS[codec_id][2]
        self.header = StoreHeader(
            version,
            _CODECS[codec_id][0],
            DistanceDescriptor(_KIND_BY_CODE[kind_code]),
            dim,
            r_c,
            k,
            n,
            seed,
        )
        pid_bytes = self._read_exact(8 * k, "centers")
        self.center_ids = np.frombuffer(pid_bytes, dtype=np.int64).copy()
        coord_bytes = self._read_exact(8 * k * dim, "centers")
        self.center_coords = np.frombuffer(coord_bytes, dtype=np.float64).reshape(k, dim).copy()
        self.entries: list[ClusterIndexEntry] = []
        total_members = 0
        for _ in range(k):
            cid, _r0, off, length, count, center_id, crc32_, _r1 = _INDEX_ENTRY.unpack(
                self._read_exact(INDEX_ENTRY_SIZE, "index")
            )
            self.entries.append(
                ClusterIndexEntry(cid, center_id, off, length, count, crc32_)
            )
            total_members += count
        if total_members != n:
            raise StorageError(
                f"index inconsistent: {total_members} members across clusters, header says {n}"
            )

    def close(self) -> None:
        if self._owns:
            self._f.close()

    def __enter__(self) -> "CompressedStore":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    @property
    def k(self) -> int:
        return self.header.k

    def load_cluster(self, cluster_id: int) -> StoredCluster:
        """Decompress one cluster's block, verifying its checksum."""
        if not 0 <= cluster_id < self.header.k:
            raise StorageError(f"cluster id {cluster_id} out of range 0..{self.header.k - 1}")
        entry = self.entries[cluster_id]
        self._f.seek(entry.byte_offset)
        comp = self._read_exact(entry.byte_length, f"cluster {cluster_id}")
        if zlib.crc32(comp) != entry.checksum:
            raise StorageError(f"cluster {cluster_id} block checksum mismatch")
        payload = self._decompress(comp)
        m = entry.member_count
        dim = self.header.dimension
        expect = 8 * m + 8 * m + 8 * m * dim
        if len(payload) != expect:
            raise StorageError(
                f"cluster {cluster_id} payload is {len(payload)} bytes, expected {expect}"
            )
        ids = np.frombuffer(payload, dtype=np.int64, count=m).copy()
        dists = np.frombuffer(payload, dtype=np.float64, count=m, offset=8 * m).copy()
        coords = (
            np.frombuffer(payload, dtype=np.float64, count=m * dim, offset=16 * m)
            .reshape(m, dim)
            .copy()
        )
        self.load_log.append(cluster_id)
        return StoredCluster(cluster_id, entry.center_id, ids, dists, coords)

    def search(
        self,
        q: Point,
        r: float,
        counter: Optional[EvalCounter] = None,
        *,
        coarse_scale: float = 1.0,
        sort_hits: bool = True,
    ) -> QueryResult:
        """Range search directly on the store.

        Same two-stage semantics and same results as searching the
        in-memory database this store was written from; only the
        candidate clusters' blocks are decompressed.
        """
        if r < 0:
            raise ValueError(f"radius must be non-negative, got {r}")
        if coarse_scale <= 0:
            raise ValueError(f"coarse_scale must be positive, got {coarse_scale}")
        if q.dimension != self.header.dimension:
            raise ValueError(
                f"query has dimension {q.dimension}, store has {self.header.dimension}"
            )
        desc = self.header.distance
        _validate_coords(q.coords, desc, "query")
        code = desc.code
        k = self.header.k
        hits: list[tuple[int, float]] = []
        scanned = 0
        fine = 0
        if k:
            dm = kernels.dists(code, q.coords, self.center_coords)
            if counter is not None:
                counter.add(k, "coarse")
            threshold = (r + self.header.r_c) * coarse_scale
            for ci in np.flatnonzero(dm <= threshold):
                block = self.load_cluster(int(ci))
                bd = kernels.dists(code, q.coords, block.coords)
                fine += len(block.member_ids)
                scanned += 1
                for pos in np.flatnonzero(bd <= r):
                    hits.append((int(block.member_ids[pos]), float(bd[pos])))
            if counter is not None:
                counter.add(fine, "fine")
        if sort_hits:
            hits.sort(key=lambda h: (h[1], h[0]))
        n = self.header.n
        stats = SearchStats(k, fine, scanned, (fine / n) if n else 0.0)
        return QueryResult(hits, stats)

    def to_database(self) -> ClusteredDatabase:
        """Materialize the full in-memory clustered database."""
        h = self.header
        dataset = Dataset(h.dimension, h.distance)
        db = ClusteredDatabase(dataset, h.r_c, h.permutation_seed)
        for ci in range(h.k):
            block = self.load_cluster(ci)
            cluster = db._append_center(block.center_id, self.center_coords[ci])
            for j in range(len(block.member_ids)):
                pid = int(block.member_ids[j])
                dataset.add(Point(pid, block.coords[j]))
                if pid != block.center_id:
                    cluster._add(pid, float(block.center_dists[j]))
                    db._assignment[pid] = ci
        return db


def read_database(path: Union[str, Path, BinaryIO]) -> ClusteredDatabase:
    """Load a store fully back into memory."""
    with CompressedStore(path) as store:
        return store.to_database()
