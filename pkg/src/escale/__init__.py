"""Cluster-accelerated range search: exact results at sublinear comparison cost.

Datasets with low intrinsic dimension admit a simple acceleration of
range search: partition the points into radius-bounded clusters, compare
a query against the k cluster centers, and scan only the clusters whose
centers fall within r + r_c. For metric distances the triangle
inequality makes this lossless; for cosine the measured
triangle-violation rate bounds what can be missed. This package
implements the search structure, diagnostics that predict when it pays
off, a compressed on-disk store searchable block by block, and a
benchmark harness (``escale bench``) that checks the claims against a
brute-force oracle.
"""

from .analysis import (
    DensityUniformityReport,
    FractalDimensionProfile,
    RecallReport,
    TriangleViolationReport,
    density_uniformity,
    fractal_profile,
    local_fractal_dimension,
    predicted_candidate_bound,
    predicted_speedup,
    recall_vs_oracle,
    triangle_violation_rate,
)
from .clustering import (
    Cluster,
    ClusteredDatabase,
    ValidationReport,
    build,
    build_permutation,
    validate,
)
from .core import (
    Dataset,
    DistanceDescriptor,
    EvalCounter,
    Point,
    ball,
    distance,
    query_distances,
)
from .ingest import GeneratorSpec, export_vectors, generate, parse_vectors
from .kernels import BACKEND
from .search import (
    CandidateSet,
    QueryResult,
    SearchStats,
    coarse_search,
    fine_search,
    search,
)
from .storage import (
    ClusterIndexEntry,
    CompressedStore,
    CompressionStats,
    StorageError,
    StoreHeader,
    StoredCluster,
    read_database,
    write_database,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ball",
    "build",
    "build_permutation",
    "CandidateSet",
    "Cluster",
    "ClusteredDatabase",
    "ClusterIndexEntry",
    "coarse_search",
    "CompressedStore",
    "CompressionStats",
    "Dataset",
    "density_uniformity",
    "DensityUniformityReport",
    "distance",
    "DistanceDescriptor",
    "EvalCounter",
    "export_vectors",
    "fine_search",
    "fractal_profile",
    "FractalDimensionProfile",
    "generate",
    "GeneratorSpec",
    "local_fractal_dimension",
    "parse_vectors",
    "Point",
    "predicted_candidate_bound",
    "predicted_speedup",
    "query_distances",
    "QueryResult",
    "read_database",
    "recall_vs_oracle",
    "RecallReport",
    "search",
    "SearchStats",
    "StorageError",
    "StoredCluster",
    "StoreHeader",
    "triangle_violation_rate",
    "TriangleViolationReport",
    "validate",
    "ValidationReport",
    "write_database",
]
