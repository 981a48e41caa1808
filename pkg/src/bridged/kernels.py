"""Backend selection for the hot loops.

The compiled extension is used when it imports; otherwise (or when the
``BRIDGED_PURE_PYTHON`` environment variable is set) the pure-Python
implementations take over. ``BACKEND`` names the active one.
"""
import os

from bridged import _pykernels

if os.environ.get("BRIDGED_PURE_PYTHON"):
    _impl = _pykernels
else:
    try:
        from bridged import _kernels as _impl
    except ImportError:  # extension not built
        _impl = _pykernels

BACKEND = "python" if _impl is _pykernels else "cython"

pg_sample = _impl.pg_sample
smo_solve = _impl.smo_solve
max_flow = _impl.max_flow


def get_backend(name):
    """Return the kernel module for ``"cython"`` or ``"python"``."""
    if name == "python":
        return _pykernels
    if name == "cython":
        from bridged import _kernels
        return _kernels
    raise ValueError(f"unknown backend {name!r}")
