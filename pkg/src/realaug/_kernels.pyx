# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops. Semantics mirror ``_kernels_py`` operation for operation."""
import numpy as np

cimport numpy as cnp
from libc.math cimport sin, cos, M_PI, fabs

cnp.import_array()

BACKEND = "cython"


def points_in_box_mask(const double[:, ::1] cloud, double cx, double cy, double cz,
                       double l, double w, double h, double c, double s):
    cdef Py_ssize_t n = cloud.shape[0], i
    cdef double dx, dy, dz, u, v
    cdef double hl = l / 2.0, hw = w / 2.0, hh = h / 2.0
    out = np.zeros(n, dtype=np.uint8)
    cdef unsigned char[::1] m = out
    for i in range(n):
        dz = cloud[i, 2] - cz
        if fabs(dz) > hh:
            continue
        dx = cloud[i, 0] - cx
        dy = cloud[i, 1] - cy
        u = dx * c + dy * s
        v = dy * c - dx * s
        if fabs(u) <= hl and fabs(v) <= hw:
            m[i] = 1
    return out.view(np.bool_)


def support_query(const double[:, ::1] cloud, placeable_arr,
                  double cx, double cy, double radius,
                  double l, double w, double c, double s):
    """Scan the BEV disc around (cx, cy).

    Returns (n_near, n_placeable, near_placeable_idx, rect_placeable_idx)."""
    cdef const unsigned char[::1] placeable = np.ascontiguousarray(placeable_arr).view(np.uint8)
    cdef Py_ssize_t n = cloud.shape[0], i
    cdef Py_ssize_t n_near = 0, n_pl = 0, n_rect = 0
    cdef double dx, dy, u, v, r2 = radius * radius
    cdef double hl = l / 2.0, hw = w / 2.0
    near_buf = np.empty(n, dtype=np.intp)
    rect_buf = np.empty(n, dtype=np.intp)
    cdef Py_ssize_t[::1] nb = near_buf
    cdef Py_ssize_t[::1] rb = rect_buf
    for i in range(n):
        dx = cloud[i, 0] - cx
        dy = cloud[i, 1] - cy
        if dx * dx + dy * dy > r2:
            continue
        n_near += 1
        if not placeable[i]:
            continue
        nb[n_pl] = i
        n_pl += 1
        u = dx * c + dy * s
        v = dy * c - dx * s
        if fabs(u) <= hl and fabs(v) <= hw:
            rb[n_rect] = i
            n_rect += 1
    return n_near, n_pl, near_buf[:n_pl].copy(), rect_buf[:n_rect].copy()


def fourier_features(const double[:, ::1] cloud, int order):
    cdef Py_ssize_t n = cloud.shape[0], i
    cdef int f, k, base, stride = 1 + 2 * order
    cdef double u, sk, ck, s2, c2
    cdef double scale[4]
    scale[0] = 100.0
    scale[1] = 100.0
    scale[2] = 10.0
    scale[3] = 1.0
    out = np.empty((n, 4 * stride), dtype=np.float64)
    cdef double[:, ::1] o = out
    for i in range(n):
        for f in range(4):
            base = f * stride
            u = cloud[i, f] / scale[f]
            o[i, base] = u
            sk = sin(M_PI * u)
            ck = cos(M_PI * u)
            for k in range(order):
                o[i, base + 1 + 2 * k] = sk
                o[i, base + 2 + 2 * k] = ck
                s2 = 2.0 * sk * ck
                c2 = ck * ck - sk * sk
                sk = s2
                ck = c2
    return out


def support_query_grid(const double[:, ::1] cloud, placeable_arr, alive_arr,
                       const Py_ssize_t[::1] order, const Py_ssize_t[::1] starts,
                       Py_ssize_t ny, Py_ssize_t ix0, Py_ssize_t ix1, Py_ssize_t iy0, Py_ssize_t iy1,
                       double cx, double cy, double radius,
                       double l, double w, double c, double s):
    """``support_query`` restricted to alive points of grid cells
    [ix0, ix1] x [iy0, iy1]. Index arrays come back in traversal order."""
    cdef const unsigned char[::1] placeable = np.ascontiguousarray(placeable_arr).view(np.uint8)
    cdef const unsigned char[::1] alive = np.ascontiguousarray(alive_arr).view(np.uint8)
    cdef Py_ssize_t ix, j, i, lo, hi, cap = 0
    cdef Py_ssize_t n_near = 0, n_pl = 0, n_rect = 0
    cdef double dx, dy, u, v, r2 = radius * radius
    cdef double hl = l / 2.0, hw = w / 2.0
    for ix in range(ix0, ix1 + 1):
        cap += starts[ix * ny + iy1 + 1] - starts[ix * ny + iy0]
    near_buf = np.empty(cap, dtype=np.intp)
    rect_buf = np.empty(cap, dtype=np.intp)
    cdef Py_ssize_t[::1] nb = near_buf
    cdef Py_ssize_t[::1] rb = rect_buf
    for ix in range(ix0, ix1 + 1):
        lo = starts[ix * ny + iy0]
        hi = starts[ix * ny + iy1 + 1]
        for j in range(lo, hi):
            i = order[j]
            if not alive[i]:
                continue
            dx = cloud[i, 0] - cx
            dy = cloud[i, 1] - cy
            if dx * dx + dy * dy > r2:
                continue
            n_near += 1
            if not placeable[i]:
                continue
            nb[n_pl] = i
            n_pl += 1
            u = dx * c + dy * s
            v = dy * c - dx * s
            if fabs(u) <= hl and fabs(v) <= hw:
                rb[n_rect] = i
                n_rect += 1
    return n_near, n_pl, near_buf[:n_pl].copy(), rect_buf[:n_rect].copy()
