"""Compiled windowed weighted-median kernels (see ``_pykernels`` for the contract)."""
import numpy as np

from libc.math cimport fabs, NAN
from libc.stdlib cimport free, malloc

cdef extern from *:
    """
    #include <algorithm>
    struct Entry { double v; double w; Py_ssize_t idx; long group; };
    static inline bool entry_less(const Entry& a, const Entry& b) {
        return a.v < b.v || (a.v == b.v && a.idx < b.idx);
    }
    static inline void sort_entries(Entry* p, Py_ssize_t n) { std::sort(p, p + n, entry_less); }
    """
    ctypedef struct Entry:
        double v
        double w
        Py_ssize_t idx
        long group
    void sort_entries(Entry* p, Py_ssize_t n) nogil


cdef inline double _weight(double u, int code) noexcept nogil:
    if not fabs(u) <= 1.0:
        return 0.0
    if code == 0:
        return 0.75 * (1.0 - u * u)
    if code == 1:
        return 1.0 - fabs(u)
    return 0.5


cdef inline Py_ssize_t _lower(const double[::1] x, double t) noexcept nogil:
    # first index with x[i] >= t
    cdef Py_ssize_t lo = 0, hi = x.shape[0], mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if x[mid] < t:
            lo = mid + 1
        else:
            hi = mid
    return lo


cdef inline Py_ssize_t _upper(const double[::1] x, double t) noexcept nogil:
    # first index with x[i] > t
    cdef Py_ssize_t lo = 0, hi = x.shape[0], mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if x[mid] <= t:
            lo = mid + 1
        else:
            hi = mid
    return lo


cdef Py_ssize_t _fill(const double[::1] x, const double[::1] y, const long[::1] group,
                      bint has_group, double g, double bandwidth, int code, double off,
                      bint absolute, const Py_ssize_t[::1] perm, bint has_perm,
                      Entry* buf) noexcept nogil:
    # Window entries ordered by (value, index).  With a global value order
    # (no per-point offset) a wide window is cheaper to read off by scanning
    # that order than to sort.
    cdef Py_ssize_t lo = _lower(x, g - bandwidth)
    cdef Py_ssize_t hi = _upper(x, g + bandwidth)
    cdef Py_ssize_t i, t, n = 0, N = x.shape[0]
    cdef double w, v
    if has_perm and (hi - lo) * 8 > N:
        for t in range(N):
            i = perm[t]
            if i < lo or i >= hi:
                continue
            w = _weight((x[i] - g) / bandwidth, code)
            if w > 0.0:
                v = y[i]
                if absolute:
                    v = fabs(v)
                buf[n].v = v
                buf[n].w = w
                buf[n].idx = i
                buf[n].group = group[i] if has_group else 0
                n += 1
        return n
    for i in range(lo, hi):
        w = _weight((x[i] - g) / bandwidth, code)
        if w > 0.0:
            v = y[i] - off
            if absolute:
                v = fabs(v)
            buf[n].v = v
            buf[n].w = w
            buf[n].idx = i
            buf[n].group = group[i] if has_group else 0
            n += 1
    sort_entries(buf, n)
    return n


def _value_order(y, bint has_off, bint absolute):
    if has_off:
        return np.zeros(1, dtype=np.intp)
    v = np.abs(y) if absolute else np.asarray(y)
    return np.ascontiguousarray(np.argsort(v, kind="stable"), dtype=np.intp)


def window_medians(const double[::1] x, const double[::1] y, const double[::1] grid,
                   double bandwidth, int code, offset=None, bint absolute=False):
    cdef Py_ssize_t G = grid.shape[0], k, i, n
    cdef double[::1] off
    cdef bint has_off = offset is not None
    if has_off:
        off = np.ascontiguousarray(offset, dtype=np.float64)
    cdef long[::1] dummy = np.zeros(1, dtype=np.int_)
    cdef Py_ssize_t[::1] perm = _value_order(y, has_off, absolute)
    out = np.empty(G)
    cdef double[::1] res = out
    cdef double total, half, cum
    cdef Entry* buf = <Entry*>malloc(max(x.shape[0], 1) * sizeof(Entry))
    if buf == NULL:
        raise MemoryError()
    try:
        with nogil:
            for k in range(G):
                n = _fill(x, y, dummy, False, grid[k], bandwidth, code,
                          off[k] if has_off else 0.0, absolute, perm, not has_off, buf)
                if n == 0:
                    res[k] = NAN
                    continue
                total = 0.0
                for i in range(n):
                    total = total + buf[i].w
                half = total * 0.5
                cum = 0.0
                for i in range(n):
                    cum = cum + buf[i].w
                    if cum >= half:
                        res[k] = buf[i].v
                        break
    finally:
        free(buf)
    return out


def loo_window_medians(const double[::1] x, const double[::1] y, const long[::1] group,
                       Py_ssize_t n_groups, const double[::1] grid, double bandwidth,
                       int code, offset=None, bint absolute=False):
    cdef Py_ssize_t G = grid.shape[0], k, i, n, gi
    cdef double[::1] off
    cdef bint has_off = offset is not None
    if has_off:
        off = np.ascontiguousarray(offset, dtype=np.float64)
    cdef Py_ssize_t[::1] perm = _value_order(y, has_off, absolute)
    out = np.full((n_groups, G), np.nan)
    cdef double[:, ::1] res = out
    cdef double total, half, cum
    cdef Entry* buf = <Entry*>malloc(max(x.shape[0], 1) * sizeof(Entry))
    if buf == NULL:
        raise MemoryError()
    try:
        with nogil:
            for k in range(G):
                n = _fill(x, y, group, True, grid[k], bandwidth, code,
                          off[k] if has_off else 0.0, absolute, perm, not has_off, buf)
                for gi in range(n_groups):
                    total = 0.0
                    for i in range(n):
                        if buf[i].group != gi:
                            total = total + buf[i].w
                    if not total > 0.0:
                        continue
                    half = total * 0.5
                    cum = 0.0
                    for i in range(n):
                        if buf[i].group != gi:
                            cum = cum + buf[i].w
                            if cum >= half:
                                res[gi, k] = buf[i].v
                                break
    finally:
        free(buf)
    return out
