"""Kernel backend selection.

The compiled extension is preferred; set ``REALAUG_KERNELS=python`` to force
the numpy fallback (the benchmark and the backend-equivalence tests do).
"""
import os

from . import _kernels_py

_requested = os.environ.get("REALAUG_KERNELS", "auto").lower()

if _requested == "python":
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        if _requested == "cython":
            raise
        _impl = _kernels_py

BACKEND = _impl.BACKEND
points_in_box_mask = _impl.points_in_box_mask
support_query = _impl.support_query
support_query_grid = _impl.support_query_grid
fourier_features = _impl.fourier_features


def load_backend(name: str):
    """Return the kernel module for ``name`` ("python" or "cython")."""
    if name == "python":
        return _kernels_py
    from . import _kernels  # type: ignore[attr-defined]

    return _kernels
