# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernels: exact Euclidean distance transform and convex rasterizer."""
import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND = "cython"


cdef void _dt1d(cnp.int64_t* f, cnp.int64_t* d, cnp.int64_t* v,
                double* z, Py_ssize_t n) noexcept nogil:
    """Felzenszwalb-Huttenlocher 1-D squared distance transform (lower envelope)."""
    cdef Py_ssize_t q, k = 0
    cdef double s
    v[0] = 0
    z[0] = -1e30
    z[1] = 1e30
    for q in range(1, n):
        while True:
            s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * q - 2.0 * v[k])
            if s <= z[k]:
                k -= 1
            else:
                break
        k += 1
        v[k] = q
        z[k] = s
        z[k + 1] = 1e30
    k = 0
    for q in range(n):
        while z[k + 1] < q:
            k += 1
        d[q] = (q - v[k]) * (q - v[k]) + f[v[k]]


def edt_squared(free_in):
    """Exact squared Euclidean distance to the nearest non-free pixel (int64)."""
    free = np.ascontiguousarray(free_in, dtype=np.uint8)
    cdef cnp.uint8_t[:, ::1] fm = free
    cdef Py_ssize_t h = fm.shape[0], w = fm.shape[1]
    cdef Py_ssize_t r, c
    cdef cnp.int64_t big = <cnp.int64_t>(h * h + w * w + 1)
    cdef cnp.int64_t big2 = big * big
    if free.min() != 0:
        raise ValueError("distance transform needs at least one source pixel")

    out_arr = np.empty((h, w), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] out = out_arr
    cdef Py_ssize_t n = h if h > w else w
    buf_f = np.empty(n, dtype=np.int64)
    buf_d = np.empty(n, dtype=np.int64)
    buf_v = np.empty(n, dtype=np.int64)
    buf_z = np.empty(n + 1, dtype=np.float64)
    cdef cnp.int64_t[::1] f = buf_f
    cdef cnp.int64_t[::1] d = buf_d
    cdef cnp.int64_t[::1] v = buf_v
    cdef double[::1] z = buf_z

    with nogil:
        # columns first
        for c in range(w):
            for r in range(h):
                f[r] = big2 if fm[r, c] else 0
            _dt1d(&f[0], &d[0], &v[0], &z[0], h)
            for r in range(h):
                out[r, c] = d[r]
        # then rows
        for r in range(h):
            for c in range(w):
                f[c] = out[r, c]
            _dt1d(&f[0], &d[0], &v[0], &z[0], w)
            for c in range(w):
                out[r, c] = d[c]
    return out_arr


def convex_mask(verts_in, Py_ssize_t height, Py_ssize_t width):
    """Boolean mask of integer pixel centers (x=col, y=row) inside a CCW convex polygon."""
    verts = np.ascontiguousarray(verts_in, dtype=np.float64)
    out_arr = np.zeros((height, width), dtype=np.uint8)
    cdef double[:, ::1] vv = verts
    cdef cnp.uint8_t[:, ::1] out = out_arr
    cdef Py_ssize_t nv = vv.shape[0]
    if nv < 3:
        return out_arr.view(bool)
    cdef double xmin = vv[0, 0], xmax = vv[0, 0], ymin = vv[0, 1], ymax = vv[0, 1]
    cdef Py_ssize_t i, j, r, c
    for i in range(1, nv):
        if vv[i, 0] < xmin: xmin = vv[i, 0]
        if vv[i, 0] > xmax: xmax = vv[i, 0]
        if vv[i, 1] < ymin: ymin = vv[i, 1]
        if vv[i, 1] > ymax: ymax = vv[i, 1]
    cdef Py_ssize_t c0 = <Py_ssize_t>xmin if xmin > 0 else 0
    cdef Py_ssize_t c1 = <Py_ssize_t>(xmax + 1.0) + 1
    cdef Py_ssize_t r0 = <Py_ssize_t>ymin if ymin > 0 else 0
    cdef Py_ssize_t r1 = <Py_ssize_t>(ymax + 1.0) + 1
    if c1 > width: c1 = width
    if r1 > height: r1 = height
    cdef double ex, ey, px, py
    cdef bint inside
    with nogil:
        for r in range(r0, r1):
            for c in range(c0, c1):
                inside = True
                for i in range(nv):
                    j = i + 1
                    if j == nv: j = 0
                    ex = vv[j, 0] - vv[i, 0]
                    ey = vv[j, 1] - vv[i, 1]
                    px = c - vv[i, 0]
                    py = r - vv[i, 1]
                    if ex * py - ey * px < 0.0:
                        inside = False
                        break
                out[r, c] = 1 if inside else 0
    return out_arr.view(bool)
