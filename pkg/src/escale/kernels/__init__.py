"""Distance kernel backends.

Two interchangeable implementations live here: ``numba_impl`` (compiled,
the default) and ``numpy_impl`` (pure numpy fallback). The environment
variable ``ESCALE_BACKEND`` picks one at import time:

* ``auto`` (default): numba if it imports cleanly, else numpy
* ``numba``: require the compiled backend, fail loudly if unavailable
* ``numpy``: force the fallback

Both backends expose the same four functions (``dists``, ``pair_rows``,
``greedy_select``, ``assign_nearest``) over the same distance-kind
codes. ``benchmarks/kernel_benchmark.py`` compares them head to head.
"""

from __future__ import annotations

import os

EUCLIDEAN = 0
COSINE = 1
HAMMING = 2
JACCARD = 3

_VALID = ("auto", "numba", "numpy")


def resolve_backend(name: str):
    """Map a backend name to its implementation module.

    Returns (module, resolved_name). Split out from import-time setup so
    the selection logic is testable without reloading the package.
    """
    name = name.strip().lower()
    if name not in _VALID:
        raise ValueError(f"ESCALE_BACKEND must be one of {_VALID}, got {name!r}")
    if name == "numpy":
        from . import numpy_impl

        return numpy_impl, "numpy"
    if name == "numba":
        from . import numba_impl

        return numba_impl, "numba"
    try:
        from . import numba_impl

        return numba_impl, "numba"
    except ImportError:
        from . import numpy_impl

        return numpy_impl, "numpy"


_impl, BACKEND = resolve_backend(os.environ.get("ESCALE_BACKEND", "auto"))

dists = _impl.dists
pair_rows = _impl.pair_rows
greedy_select = _impl.greedy_select
assign_nearest = _impl.assign_nearest

__all__ = [
    "EUCLIDEAN",
    "COSINE",
    "HAMMING",
    "JACCARD",
    "BACKEND",
    "resolve_backend",
    "dists",
    "pair_rows",
    "greedy_select",
    "assign_nearest",
]
