# distutils: language = c++
# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled slice-statistics kernel.

Same contract as :func:`rfids._fallback.window_stats`. The median is exact:
a histogram pass over ``NBUCKET`` equal-width buckets locates the bucket(s)
holding the middle rank(s), and only those cells are partially sorted.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt
from libc.stdlib cimport malloc, calloc, free
from libcpp.algorithm cimport nth_element

cnp.import_array()

cdef enum:
    NBUCKET = 4096


cdef inline Py_ssize_t _bucket(double v, double lo, double scale) noexcept nogil:
    cdef Py_ssize_t b = <Py_ssize_t>((v - lo) * scale)
    if b >= NBUCKET:
        b = NBUCKET - 1
    elif b < 0:
        b = 0
    return b


cdef double _order_stat_pair(const double[:, ::1] m, Py_ssize_t c0, Py_ssize_t c1,
                             double lo, double hi, Py_ssize_t k_lo, Py_ssize_t k_hi,
                             Py_ssize_t* counts, double* out_hi) noexcept nogil:
    # Returns order statistic k_lo and stores order statistic k_hi (k_hi in {k_lo, k_lo + 1}).
    cdef Py_ssize_t r, c, b, i, b_lo = -1, b_hi = -1, acc = 0, below = 0, n_sel = 0, cap
    cdef Py_ssize_t n = m.shape[0] * (c1 - c0)
    cdef double scale = NBUCKET / (hi - lo)
    cdef double v, res, v_lo, v_hi
    cdef double* sel
    for b in range(NBUCKET):
        counts[b] = 0
    for r in range(m.shape[0]):
        for c in range(c0, c1):
            counts[_bucket(m[r, c], lo, scale)] += 1
    for b in range(NBUCKET):
        if b_lo < 0 and acc + counts[b] > k_lo:
            b_lo = b
            cap = 0
        if b_lo >= 0:
            cap += counts[b]
        if acc + counts[b] > k_hi:
            b_hi = b
            break
        acc += counts[b]
    # Gather by value with one bucket of slack on each side; ranks are counted
    # exactly, so rounding at bucket edges cannot shift the result.
    v_lo = lo + (b_lo - 1) / scale
    v_hi = lo + (b_hi + 2) / scale
    if b_lo > 0:
        cap += counts[b_lo - 1]
    if b_hi + 1 < NBUCKET:
        cap += counts[b_hi + 1]
    if b_hi + 2 < NBUCKET:
        cap += counts[b_hi + 2]
    cap += 16
    sel = <double*> malloc(cap * sizeof(double))
    # branch-free: about half the cells fall below v_lo in random order
    for r in range(m.shape[0]):
        for c in range(c0, c1):
            v = m[r, c]
            below += v < v_lo
            sel[n_sel] = v
            n_sel += (v >= v_lo) & (v <= v_hi) & (n_sel < cap - 1)
    if below > k_lo or below + n_sel <= k_hi or n_sel >= cap - 1:
        # slack window missed a target rank: select over every cell
        free(sel)
        sel = <double*> malloc(n * sizeof(double))
        n_sel = 0
        below = 0
        for r in range(m.shape[0]):
            for c in range(c0, c1):
                sel[n_sel] = m[r, c]
                n_sel += 1
    nth_element(sel, sel + (k_lo - below), sel + n_sel)
    res = sel[k_lo - below]
    if k_hi == k_lo:
        out_hi[0] = res
    else:
        # k_hi is the smallest value right of the k_lo position
        v = sel[k_lo - below + 1]
        for i in range(k_lo - below + 2, n_sel):
            if sel[i] < v:
                v = sel[i]
        out_hi[0] = v
    free(sel)
    return res


def window_stats(const double[:, ::1] matrix, const Py_ssize_t[::1] col_starts, const Py_ssize_t[::1] col_ends):
    cdef Py_ssize_t n_rows = matrix.shape[0]
    cdef Py_ssize_t n_win = col_starts.shape[0]
    cdef Py_ssize_t w, r, c, c0, c1, count, half
    cdef double v, vmax, vmin, total, mean, dev, ss, lo_mid, hi_mid
    cdef Py_ssize_t* counts
    out = np.empty((n_win, 6), dtype=np.float64)
    cdef double[:, ::1] res = out

    for w in range(n_win):
        c0 = col_starts[w]
        c1 = col_ends[w]
        if c0 < 0 or c1 > matrix.shape[1] or c1 <= c0 or n_rows == 0:
            raise ValueError(f"empty or out-of-bounds column window [{c0}, {c1})")
    counts = <Py_ssize_t*> calloc(NBUCKET, sizeof(Py_ssize_t))
    if counts == NULL:
        raise MemoryError()
    with nogil:
        for w in range(n_win):
            c0 = col_starts[w]
            c1 = col_ends[w]
            count = n_rows * (c1 - c0)
            vmax = matrix[0, c0]
            vmin = vmax
            total = 0.0
            for r in range(n_rows):
                for c in range(c0, c1):
                    v = matrix[r, c]
                    total += v
                    if v > vmax:
                        vmax = v
                    if v < vmin:
                        vmin = v
            mean = total / count
            ss = 0.0
            for r in range(n_rows):
                for c in range(c0, c1):
                    dev = matrix[r, c] - mean
                    ss += dev * dev
            half = count // 2
            if vmax == vmin:
                res[w, 3] = vmin
            elif count % 2 == 0:
                lo_mid = _order_stat_pair(matrix, c0, c1, vmin, vmax, half - 1, half, counts, &hi_mid)
                res[w, 3] = 0.5 * (lo_mid + hi_mid)
            else:
                res[w, 3] = _order_stat_pair(matrix, c0, c1, vmin, vmax, half, half, counts, &hi_mid)
            res[w, 0] = vmax
            res[w, 1] = vmin
            res[w, 2] = mean
            res[w, 4] = sqrt(ss / count)
            res[w, 5] = total
    free(counts)
    return out
