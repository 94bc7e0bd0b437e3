"""Pure numpy implementation of the hot kernels (used when the extension is absent)."""
import numpy as np


def window_stats(matrix, col_starts, col_ends):
    """Six statistics for each column window of ``matrix``.

    Row ``w`` of the result holds max, min, mean, median, population std and
    sum over all cells ``matrix[:, col_starts[w]:col_ends[w]]``.
    """
    matrix = np.ascontiguousarray(matrix, dtype=np.float64)
    n_rows, n_cols = matrix.shape
    out = np.empty((len(col_starts), 6), dtype=np.float64)
    for w, (c0, c1) in enumerate(zip(col_starts, col_ends)):
        if c0 < 0 or c1 > n_cols or c1 <= c0 or n_rows == 0:
            raise ValueError(f"empty or out-of-bounds column window [{c0}, {c1})")
        cells = matrix[:, c0:c1].ravel()
        # sequential row-major accumulation, same order as the compiled kernel
        total = float(np.add.accumulate(cells)[-1])
        mean = total / cells.size
        out[w, 0] = cells.max()
        out[w, 1] = cells.min()
        out[w, 2] = mean
        out[w, 3] = np.median(cells)
        out[w, 4] = np.sqrt(np.square(cells - mean).sum() / cells.size)
        out[w, 5] = total
    return out
