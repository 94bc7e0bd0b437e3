"""Kernel dispatch: compiled extension when importable, numpy otherwise.

Set ``RFIDS_PURE_PYTHON=1`` to force the fallback.
"""
import os

import numpy as np

from . import _fallback

BACKEND = "python"
_impl = _fallback.window_stats

if not os.environ.get("RFIDS_PURE_PYTHON"):
    try:
        from . import _kernels
    except ImportError:  # extension not built
        pass
    else:
        _impl = _kernels.window_stats
        BACKEND = "cython"


def window_stats(matrix, col_starts, col_ends):
    """(max, min, mean, median, std, sum) per column window, shape (len(col_starts), 6)."""
    matrix = np.ascontiguousarray(matrix, dtype=np.float64)
    if matrix.ndim != 2:
        raise ValueError("matrix must be 2-D")
    starts = np.ascontiguousarray(col_starts, dtype=np.intp)
    ends = np.ascontiguousarray(col_ends, dtype=np.intp)
    if starts.shape != ends.shape:
        raise ValueError("col_starts and col_ends differ in length")
    return _impl(matrix, starts, ends)
