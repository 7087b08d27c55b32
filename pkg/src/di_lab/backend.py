"""Kernel backend selection.

The compiled extension is used when importable; set DI_LAB_BACKEND=python to
force the numpy fallback.
"""
import os

from . import _fallback

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

NAME = "python"
kernels = _fallback

if _compiled is not None and os.environ.get("DI_LAB_BACKEND", "").lower() != "python":
    kernels = _compiled
    NAME = "cython"


def get(name=None):
    """Return a kernel module by name ('cython' or 'python'), default active."""
    if name is None:
        return kernels
    if name == "python":
        return _fallback
    if name == "cython":
        if _compiled is None:
            raise ImportError("compiled kernels are not built")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")


def available():
    return ["cython", "python"] if _compiled is not None else ["python"]
