"""Kernel selection: compiled extension when importable, numpy fallback otherwise.

Set ``AREAFORGE_PURE=1`` to force the fallback.
"""
import os

import numpy as np

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py
if os.environ.get("AREAFORGE_PURE") != "1":
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py


def _i64(a):
    return np.ascontiguousarray(a, dtype=np.int64)


def _f64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def face_areas(xy, ptr, idx, impl=None):
    return (impl or _impl).face_areas(_f64(xy), _i64(ptr), _i64(idx))


def area_jacobian(xy, ptr, idx, col, impl=None):
    return (impl or _impl).area_jacobian(_f64(xy), _i64(ptr), _i64(idx), _i64(col))


def crossing_pairs(xy, edges, tol=1e-12, impl=None):
    return (impl or _impl).crossing_pairs(_f64(xy), _i64(np.reshape(edges, (-1, 2))), float(tol))


def implementations() -> dict:
    out = {"python": _kernels_py}
    if BACKEND == "cython":
        out["cython"] = _impl
    return out
