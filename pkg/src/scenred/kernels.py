"""Kernel dispatch: compiled extension when importable, numpy otherwise.

Set ``SCENRED_PURE_PYTHON=1`` to force the fallback.
"""

import importlib
import os

from . import _kernels_py


def load(name: str | None = None):
    """Return the kernel module ``"cython"`` or ``"python"`` (default: best available)."""
    if name == "python":
        return _kernels_py
    if name in (None, "cython"):
        try:
            return importlib.import_module("scenred._kernels")
        except ImportError:
            if name == "cython":
                raise
    return _kernels_py


if os.environ.get("SCENRED_PURE_PYTHON"):
    impl = _kernels_py
else:
    impl = load()

BACKEND = "python" if impl is _kernels_py else "cython"

sq_euclidean = impl.sq_euclidean
nearest_selected = impl.nearest_selected
masked_weighted_sum = impl.masked_weighted_sum
forward_select = impl.forward_select
