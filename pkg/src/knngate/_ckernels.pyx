# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled k-NN scan.

Single pass over the store keeping a bounded max-heap of (distance, index)
pairs. Points are visited in index order, so a later point only enters the
heap when strictly closer than the current worst, which is exactly the
ascending-index tie rule.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs

cnp.import_array()


cdef inline bint _worse(double da, Py_ssize_t ia, double db, Py_ssize_t ib) noexcept nogil:
    return da > db or (da == db and ia > ib)


cdef void _sift_down(double* hd, Py_ssize_t* hi, Py_ssize_t size, Py_ssize_t pos) noexcept nogil:
    cdef Py_ssize_t child, right
    cdef double td
    cdef Py_ssize_t ti
    while True:
        child = 2 * pos + 1
        if child >= size:
            break
        right = child + 1
        if right < size and _worse(hd[right], hi[right], hd[child], hi[child]):
            child = right
        if not _worse(hd[child], hi[child], hd[pos], hi[pos]):
            break
        td = hd[pos]; hd[pos] = hd[child]; hd[child] = td
        ti = hi[pos]; hi[pos] = hi[child]; hi[child] = ti
        pos = child


cdef void _sift_up(double* hd, Py_ssize_t* hi, Py_ssize_t pos) noexcept nogil:
    cdef Py_ssize_t parent
    cdef double td
    cdef Py_ssize_t ti
    while pos > 0:
        parent = (pos - 1) // 2
        if not _worse(hd[pos], hi[pos], hd[parent], hi[parent]):
            break
        td = hd[pos]; hd[pos] = hd[parent]; hd[parent] = td
        ti = hi[pos]; hi[pos] = hi[parent]; hi[parent] = ti
        pos = parent


cdef inline double _dist(const double[:, ::1] pts, const double[::1] x,
                         Py_ssize_t i, Py_ssize_t d, int norm) noexcept nogil:
    cdef Py_ssize_t j
    cdef double acc, t
    if norm == 0:
        t = pts[i, 0] - x[0]
        acc = t * t
        for j in range(1, d):
            t = pts[i, j] - x[j]
            acc = acc + t * t
        return sqrt(acc)
    acc = fabs(pts[i, 0] - x[0])
    if norm == 1:
        for j in range(1, d):
            acc = acc + fabs(pts[i, j] - x[j])
    else:
        for j in range(1, d):
            t = fabs(pts[i, j] - x[j])
            if t > acc:
                acc = t
    return acc


def knn_scan(points, x, Py_ssize_t k, int norm_code):
    if norm_code < 0 or norm_code > 2:
        raise ValueError(f"unknown norm code {norm_code}")
    cdef const double[:, ::1] pts = np.ascontiguousarray(points, dtype=np.float64)
    cdef const double[::1] q = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t n = pts.shape[0]
    cdef Py_ssize_t d = pts.shape[1]
    if k > n:
        k = n
    heap_d = np.empty(k, dtype=np.float64)
    heap_i = np.empty(k, dtype=np.intp)
    cdef double[::1] hd = heap_d
    cdef Py_ssize_t[::1] hi = heap_i
    cdef Py_ssize_t i, size = 0, last
    cdef double dist, td
    cdef Py_ssize_t ti
    with nogil:
        for i in range(n):
            dist = _dist(pts, q, i, d, norm_code)
            if size < k:
                hd[size] = dist
                hi[size] = i
                size += 1
                _sift_up(&hd[0], &hi[0], size - 1)
            elif dist < hd[0]:
                hd[0] = dist
                hi[0] = i
                _sift_down(&hd[0], &hi[0], size, 0)
        # heapsort in place: worst element moves to the back each round
        last = size - 1
        while last > 0:
            td = hd[0]; hd[0] = hd[last]; hd[last] = td
            ti = hi[0]; hi[0] = hi[last]; hi[last] = ti
            _sift_down(&hd[0], &hi[0], last, 0)
            last -= 1
    return heap_i.astype(np.int64), heap_d
