# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
# distutils: language = c++
"""Compiled kernels for the projection-trimming loop.

Bit-compatible with ``_fallback.py``: same operations, same order.
"""

import numpy as np

from libc.math cimport fabs, sqrt
from libc.stdlib cimport free, malloc
from libcpp.algorithm cimport max_element, nth_element, sort

cdef double MAD_SCALE = 1.4826


cdef inline double _median_select(double *s, Py_ssize_t m) noexcept nogil:
    # partial selection; picks the same order statistics as a full sort
    nth_element(s, s + m // 2, s + m)
    if m % 2:
        return s[m // 2]
    return (max_element(s, s + m // 2)[0] + s[m // 2]) / 2.0


cdef inline double _median_sorted(const double *s, Py_ssize_t m) noexcept nogil:
    if m % 2:
        return s[m // 2]
    return (s[m // 2 - 1] + s[m // 2]) / 2.0


cdef void _scan(const double *y, Py_ssize_t m, double *buf,
                double *gap, Py_ssize_t *left, double *med, double *mad,
                Py_ssize_t *far, double *far_dist) noexcept nogil:
    cdef Py_ssize_t i
    cdef double d, best, dev
    for i in range(m):
        buf[i] = y[i]
    sort(buf, buf + m)
    best = buf[1] - buf[0]
    left[0] = 0
    for i in range(1, m - 1):
        d = buf[i + 1] - buf[i]
        if d > best:
            best = d
            left[0] = i
    gap[0] = best
    med[0] = _median_sorted(buf, m)
    far[0] = 0
    far_dist[0] = -1.0
    for i in range(m):
        dev = fabs(y[i] - med[0])
        buf[i] = dev
        if dev > far_dist[0]:
            far_dist[0] = dev
            far[0] = i
    mad[0] = _median_select(buf, m)


def scan_projection(const double[::1] y):
    cdef Py_ssize_t m = y.shape[0]
    if m < 2:
        raise ValueError("need at least 2 projected values")
    cdef double gap, med, mad, far_dist
    cdef Py_ssize_t left, far
    cdef double *buf = <double *>malloc(m * sizeof(double))
    if buf == NULL:
        raise MemoryError()
    try:
        with nogil:
            _scan(&y[0], m, buf, &gap, &left, &med, &mad, &far, &far_dist)
    finally:
        free(buf)
    return gap, left, med, mad, far, far_dist


def studentized_max_gaps(const double[:, ::1] z):
    cdef Py_ssize_t reps = z.shape[0], m = z.shape[1], r, i
    if m < 2:
        raise ValueError("need at least 2 columns")
    # numpy's vectorised row sort beats a per-row std::sort here
    cdef const double[:, ::1] s = np.sort(z, axis=1)
    out = np.empty(reps)
    cdef double[::1] o = out
    cdef double best, med
    cdef double *buf = <double *>malloc(m * sizeof(double))
    if buf == NULL:
        raise MemoryError()
    try:
        with nogil:
            for r in range(reps):
                best = s[r, 1] - s[r, 0]
                for i in range(1, m - 1):
                    if s[r, i + 1] - s[r, i] > best:
                        best = s[r, i + 1] - s[r, i]
                med = _median_sorted(&s[r, 0], m)
                for i in range(m):
                    buf[i] = fabs(z[r, i] - med)
                o[r] = best / (MAD_SCALE * _median_select(buf, m))
    finally:
        free(buf)
    return out


def alpha_radii(const double[:, ::1] x, Py_ssize_t k):
    cdef Py_ssize_t n = x.shape[0], d = x.shape[1], i, j, c
    cdef double acc, diff
    if k < 1 or k > n:
        raise ValueError("k out of range")
    out = np.empty(n)
    cdef double[::1] o = out
    cdef double *row = <double *>malloc(n * sizeof(double))
    if row == NULL:
        raise MemoryError()
    try:
        with nogil:
            for i in range(n):
                for j in range(n):
                    acc = 0.0
                    for c in range(d):
                        diff = x[i, c] - x[j, c]
                        acc = acc + diff * diff
                    row[j] = acc
                nth_element(row, row + k - 1, row + n)
                o[i] = sqrt(row[k - 1])
    finally:
        free(row)
    return out
