# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: Bessel J0/J1, Bessel-weighted quadrature sums and the
fused checkerboard step. Mirrors ``_pykernels`` exactly in semantics."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, cos, sin, fabs

cnp.import_array()

cdef double SERIES_CUTOFF = 12.0
cdef double TWO_OVER_PI = 0.63661977236758134308
cdef double INV_SQRT2 = 0.70710678118654752440


cdef inline double _series(int n, double z) noexcept nogil:
    cdef double q = -0.25 * z * z
    cdef double t = 1.0 if n == 0 else 0.5 * z
    cdef double s = t
    cdef int k
    for k in range(1, 80):
        t *= q / (k * (k + n))
        s += t
        if fabs(t) < 1e-18:
            break
    return s


cdef inline double _hankel(int n, double z) noexcept nogil:
    cdef double mu = 4.0 * n * n
    cdef double inv8z = 1.0 / (8.0 * z)
    cdef double t = 1.0, tn
    cdef double p = 1.0, q = 0.0
    cdef double c, s, cchi, schi
    cdef int k, odd
    for k in range(1, 64):
        odd = 2 * k - 1
        tn = t * (mu - odd * odd) * inv8z / k
        if fabs(tn) >= fabs(t):
            break
        t = tn
        if k % 2 == 0:
            p += t if (k // 2) % 2 == 0 else -t
        else:
            q += t if ((k - 1) // 2) % 2 == 0 else -t
        if fabs(t) < 1e-16:
            break
    c = cos(z)
    s = sin(z)
    if n == 0:
        cchi = (c + s) * INV_SQRT2
        schi = (s - c) * INV_SQRT2
    else:
        cchi = (s - c) * INV_SQRT2
        schi = -(s + c) * INV_SQRT2
    return sqrt(TWO_OVER_PI / z) * (p * cchi - q * schi)


cdef inline double _bessel(int n, double z) noexcept nogil:
    if z < SERIES_CUTOFF:
        return _series(n, z)
    return _hankel(n, z)


def bessel(int order, z):
    """J_order(z) elementwise for z >= 0 (order 0 or 1)."""
    cdef cnp.ndarray[double, ndim=1] zz = np.ascontiguousarray(z, dtype=np.float64).ravel()
    cdef Py_ssize_t i, m = zz.shape[0]
    cdef cnp.ndarray[double, ndim=1] out = np.empty(m)
    cdef double[::1] zv = zz
    cdef double[::1] ov = out
    with nogil:
        for i in range(m):
            ov[i] = _bessel(order, zv[i])
    return out.reshape(np.shape(z))


def bessel_series(int order, z):
    cdef cnp.ndarray[double, ndim=1] zz = np.ascontiguousarray(z, dtype=np.float64).ravel()
    cdef Py_ssize_t i, m = zz.shape[0]
    cdef cnp.ndarray[double, ndim=1] out = np.empty(m)
    for i in range(m):
        out[i] = _series(order, zz[i])
    return out.reshape(np.shape(z))


def bessel_hankel(int order, z):
    cdef cnp.ndarray[double, ndim=1] zz = np.ascontiguousarray(z, dtype=np.float64).ravel()
    cdef Py_ssize_t i, m = zz.shape[0]
    cdef cnp.ndarray[double, ndim=1] out = np.empty(m)
    for i in range(m):
        out[i] = _hankel(order, zz[i])
    return out.reshape(np.shape(z))


def bessel_weighted_sum(int order, k, w, r):
    """out[j] = sum_i w[i] * J_order(k[i] * r[j]), summed in index order."""
    cdef double[::1] kv = np.ascontiguousarray(k, dtype=np.float64)
    cdef double[::1] wv = np.ascontiguousarray(w, dtype=np.float64)
    cdef double[::1] rv = np.ascontiguousarray(r, dtype=np.float64)
    cdef Py_ssize_t i, j, nk = kv.shape[0], nr = rv.shape[0]
    cdef cnp.ndarray[double, ndim=1] out = np.empty(nr)
    cdef double[::1] ov = out
    cdef double acc, rj
    with nogil:
        for j in range(nr):
            rj = rv[j]
            acc = 0.0
            for i in range(nk):
                acc += wv[i] * _bessel(order, kv[i] * rj)
            ov[j] = acc
    return out


def walk_step(buf, Py_ssize_t t):
    """Advance a compact checkerboard state from step t to t + 1 in place.

    ``buf[i, j]`` holds the spinor at site (2i - t, 2j - t); only the leading
    (t + 1) x (t + 1) block is occupied on entry, (t + 2) x (t + 2) on exit.
    """
    cdef Py_ssize_t n = t + 1
    if buf.shape[0] < n + 1 or buf.shape[1] < n + 1:
        raise ValueError("buffer too small for the next step")
    cdef double[:, :, ::1] v = buf.view(np.float64)
    with nogil:
        _x_substep(v, n)
        _y_substep(v, n)


cdef void _x_substep(double[:, :, ::1] v, Py_ssize_t n) noexcept nogil:
    # sigma_x: + component (u + d)/2 moves i -> i + 1, - component stays
    cdef Py_ssize_t i, j
    cdef double pr, pi, mr, mi
    for j in range(n):
        pr = 0.5 * (v[n - 1, j, 0] + v[n - 1, j, 2])
        pi = 0.5 * (v[n - 1, j, 1] + v[n - 1, j, 3])
        v[n, j, 0] = pr
        v[n, j, 1] = pi
        v[n, j, 2] = pr
        v[n, j, 3] = pi
    for i in range(n - 1, 0, -1):
        for j in range(n):
            pr = 0.5 * (v[i - 1, j, 0] + v[i - 1, j, 2])
            pi = 0.5 * (v[i - 1, j, 1] + v[i - 1, j, 3])
            mr = 0.5 * (v[i, j, 0] - v[i, j, 2])
            mi = 0.5 * (v[i, j, 1] - v[i, j, 3])
            v[i, j, 0] = pr + mr
            v[i, j, 1] = pi + mi
            v[i, j, 2] = pr - mr
            v[i, j, 3] = pi - mi
    for j in range(n):
        mr = 0.5 * (v[0, j, 0] - v[0, j, 2])
        mi = 0.5 * (v[0, j, 1] - v[0, j, 3])
        v[0, j, 0] = mr
        v[0, j, 1] = mi
        v[0, j, 2] = -mr
        v[0, j, 3] = -mi


cdef void _y_substep(double[:, :, ::1] v, Py_ssize_t n) noexcept nogil:
    # sigma_y: + component (u - i d)/2 along (1, i) moves j -> j + 1,
    # - component (u + i d)/2 along (1, -i) stays
    cdef Py_ssize_t i, j
    cdef double pr, pi, mr, mi
    for i in range(n + 1):
        pr = 0.5 * (v[i, n - 1, 0] + v[i, n - 1, 3])
        pi = 0.5 * (v[i, n - 1, 1] - v[i, n - 1, 2])
        v[i, n, 0] = pr
        v[i, n, 1] = pi
        v[i, n, 2] = -pi
        v[i, n, 3] = pr
        for j in range(n - 1, 0, -1):
            pr = 0.5 * (v[i, j - 1, 0] + v[i, j - 1, 3])
            pi = 0.5 * (v[i, j - 1, 1] - v[i, j - 1, 2])
            mr = 0.5 * (v[i, j, 0] - v[i, j, 3])
            mi = 0.5 * (v[i, j, 1] + v[i, j, 2])
            v[i, j, 0] = pr + mr
            v[i, j, 1] = pi + mi
            v[i, j, 2] = mi - pi
            v[i, j, 3] = pr - mr
        mr = 0.5 * (v[i, 0, 0] - v[i, 0, 3])
        mi = 0.5 * (v[i, 0, 1] + v[i, 0, 2])
        v[i, 0, 0] = mr
        v[i, 0, 1] = mi
        v[i, 0, 2] = mi
        v[i, 0, 3] = -mr
