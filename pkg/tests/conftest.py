import numpy as np
import pytest

from escale.core import Dataset, DistanceDescriptor


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def make_dataset(kind: str, n: int, dim: int, seed: int = 0) -> Dataset:
    """Random dataset legal under the given distance kind.

    Integer-valued coordinates for hamming/jaccard, strictly positive
    floats for cosine (no zero vectors), plain uniforms for euclidean.
    """
    gen = np.random.default_rng(seed)
    if kind in ("hamming", "jaccard"):
        coords = gen.integers(0, 3, size=(n, dim)).astype(np.float64)
        dead = ~coords.any(axis=1)
        coords[dead, 0] = 1.0
    elif kind == "cosine":
        coords = gen.random((n, dim)) + 0.05
    else:
        coords = gen.random((n, dim))
    return Dataset.from_arrays(np.arange(n, dtype=np.int64), coords, DistanceDescriptor(kind))
