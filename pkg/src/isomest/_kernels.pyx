# cython: language_level=3
"""Compiled kernels: block M-step, PAVA, lower hull and Chernoff slopes.

Mirrors ``_pykernels`` call for call.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt
from libc.stdlib cimport malloc, free, qsort

cnp.import_array()

cdef enum:
    L2 = 0
    HUBER = 1
    SL1 = 2
    SHUBER = 3
    L1 = 4
    MAX_BISECT = 2100

# points this close to a chord (relative to the cross-product terms) count as on it
cdef double HULL_RTOL = 1e-12


cdef inline double _blend(double x) nogil:
    return x + x * x * x * (4.0 + x * (-7.0 + 3.0 * x))


cdef inline double _sl1(double u, double m) nogil:
    cdef double a = 1.0 / m - 1.0 / (m * m)
    cdef double b = 1.0 / m
    cdef double au = fabs(u)
    cdef double val, x
    if au <= a:
        val = m * au
    elif au >= b:
        val = 1.0
    else:
        x = (au - a) / (b - a)
        if x > 1.0:
            x = 1.0
        val = (1.0 - 1.0 / m) + _blend(x) / m
    if u > 0:
        return val
    elif u < 0:
        return -val
    return 0.0


cdef inline double _psi(int code, double k, double m, double u) nogil:
    if code == L2:
        return 2.0 * u
    elif code == HUBER:
        if u > k:
            return k
        elif u < -k:
            return -k
        return u
    elif code == SL1:
        return _sl1(u, m)
    elif code == SHUBER:
        return k * _sl1(u / (m * k), m)
    if u > 0:
        return 1.0
    elif u < 0:
        return -1.0
    return 0.0


cdef double _score(int code, double k, double m, const double* x,
                   Py_ssize_t n, double mu, double sigma) nogil:
    cdef double s = 0.0
    cdef Py_ssize_t i
    for i in range(n):
        s += _psi(code, k, m, (x[i] - mu) / sigma)
    return s


cdef int _cmp(const void* a, const void* b) noexcept nogil:
    cdef double da = (<const double*>a)[0]
    cdef double db = (<const double*>b)[0]
    return (da > db) - (da < db)


cdef void _central(const double* x, Py_ssize_t n, double* lo, double* hi) nogil:
    # the two central order statistics (equal for odd n)
    cdef double* buf = <double*>malloc(n * sizeof(double))
    cdef Py_ssize_t i
    for i in range(n):
        buf[i] = x[i]
    qsort(buf, n, sizeof(double), _cmp)
    if n % 2:
        lo[0] = buf[n // 2]
        hi[0] = buf[n // 2]
    else:
        lo[0] = buf[n // 2 - 1]
        hi[0] = buf[n // 2]
    free(buf)


cdef double _median(const double* x, Py_ssize_t n) nogil:
    cdef double a, b
    _central(x, n, &a, &b)
    if n % 2:
        return a
    return 0.5 * (a + b)


cdef double _solve(int code, double k, double m, const double* x,
                   Py_ssize_t n, double sigma) nogil:
    cdef double lo0, hi0, lo, hi, mid, left, right, lo_pos, s_left, total, ca, cb, corner
    cdef Py_ssize_t i
    cdef int it
    cdef bint have_lo_pos = False
    if code == L2:
        total = 0.0
        for i in range(n):
            total += x[i]
        return total / n
    if code == L1:
        return _median(x, n)
    lo0 = x[0]
    hi0 = x[0]
    for i in range(1, n):
        if x[i] < lo0:
            lo0 = x[i]
        if x[i] > hi0:
            hi0 = x[i]
    if lo0 == hi0:
        return lo0
    if n % 2 == 0:
        # flat zero set: all residuals saturated between the central pair
        _central(x, n, &ca, &cb)
        corner = 1.0 / m if code == SL1 else k
        if cb - ca >= 2.0 * corner * sigma:
            return 0.5 * (ca + cb)
    if _score(code, k, m, x, n, lo0, sigma) <= 0.0:
        left = lo0
        lo_pos = lo0
    else:
        lo = lo0
        hi = hi0
        for it in range(MAX_BISECT):
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            if _score(code, k, m, x, n, mid, sigma) > 0.0:
                lo = mid
            else:
                hi = mid
        left = hi
        lo_pos = lo
        have_lo_pos = True
    s_left = _score(code, k, m, x, n, left, sigma)
    if s_left < 0.0:
        right = lo_pos if have_lo_pos else left
    elif _score(code, k, m, x, n, hi0, sigma) >= 0.0:
        right = hi0
    else:
        lo = left
        hi = hi0
        for it in range(MAX_BISECT):
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            if _score(code, k, m, x, n, mid, sigma) >= 0.0:
                lo = mid
            else:
                hi = mid
        right = lo
    return 0.5 * (left + right)


def block_solve(int code, double k, double m, values, double sigma):
    cdef const double[::1] x = np.ascontiguousarray(values, dtype=np.float64)
    if x.shape[0] == 0:
        raise ValueError("empty block")
    return _solve(code, k, m, &x[0], x.shape[0], sigma)


def pava(int code, double k, double m, x_in, group_starts, double sigma):
    cdef const double[::1] x = np.ascontiguousarray(x_in, dtype=np.float64)
    cdef const cnp.int64_t[::1] groups = np.ascontiguousarray(group_starts, dtype=np.int64)
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t ng = groups.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] starts_arr = np.empty(ng, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] levels_arr = np.empty(ng, dtype=np.float64)
    cdef cnp.int64_t[::1] starts = starts_arr
    cdef double[::1] levels = levels_arr
    cdef Py_ssize_t top = 0, g, start, stop
    with nogil:
        for g in range(ng):
            start = groups[g]
            stop = groups[g + 1] if g + 1 < ng else n
            starts[top] = start
            levels[top] = _solve(code, k, m, &x[start], stop - start, sigma)
            top += 1
            while top > 1 and levels[top - 2] >= levels[top - 1]:
                top -= 1
                start = starts[top - 1]
                levels[top - 1] = _solve(code, k, m, &x[start], stop - start, sigma)
    return starts_arr[:top].copy(), levels_arr[:top].copy()


cdef Py_ssize_t _hull(const double* v, const double* z, Py_ssize_t n,
                      Py_ssize_t* out) nogil:
    cdef Py_ssize_t top = 0, i, a, b
    cdef double lhs, rhs
    for i in range(n):
        while top >= 2:
            a = out[top - 2]
            b = out[top - 1]
            lhs = (z[b] - z[a]) * (v[i] - v[b])
            rhs = (z[i] - z[b]) * (v[b] - v[a])
            if lhs >= rhs - HULL_RTOL * (fabs(lhs) + fabs(rhs)):
                top -= 1
            else:
                break
        out[top] = i
        top += 1
    return top


def lower_hull(v_in, z_in):
    cdef const double[::1] v = np.ascontiguousarray(v_in, dtype=np.float64)
    cdef const double[::1] z = np.ascontiguousarray(z_in, dtype=np.float64)
    cdef Py_ssize_t n = v.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] out = np.empty(n, dtype=np.int64)
    cdef Py_ssize_t* buf = <Py_ssize_t*>malloc(max(n, 1) * sizeof(Py_ssize_t))
    cdef Py_ssize_t top, i
    if n == 0:
        free(buf)
        return out
    top = _hull(&v[0], &z[0], n, buf)
    for i in range(top):
        out[i] = buf[i]
    free(buf)
    return out[:top].copy()


def hull_slope_at(v_in, z_in, hull_in, double v0):
    cdef const double[::1] v = np.ascontiguousarray(v_in, dtype=np.float64)
    cdef const double[::1] z = np.ascontiguousarray(z_in, dtype=np.float64)
    cdef const cnp.int64_t[::1] hull = np.ascontiguousarray(hull_in, dtype=np.int64)
    cdef Py_ssize_t nh = hull.shape[0], j = 1
    cdef Py_ssize_t a, b
    if nh < 2:
        return 0.0
    while j < nh - 1 and v[hull[j]] < v0:
        j += 1
    a = hull[j - 1]
    b = hull[j]
    return (z[b] - z[a]) / (v[b] - v[a])


def chernoff_batch(noise_in, Py_ssize_t n_side, double step):
    cdef const double[:, ::1] noise = np.ascontiguousarray(noise_in, dtype=np.float64)
    cdef Py_ssize_t reps = noise.shape[0]
    cdef Py_ssize_t npts = 2 * n_side + 1
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out_arr = np.empty(reps, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double* v = <double*>malloc(npts * sizeof(double))
    cdef double* z = <double*>malloc(npts * sizeof(double))
    cdef Py_ssize_t* hull = <Py_ssize_t*>malloc(npts * sizeof(Py_ssize_t))
    cdef double scale = sqrt(step)
    cdef double acc
    cdef Py_ssize_t r, i, top, j, a, b
    with nogil:
        for i in range(npts):
            v[i] = <double>(i - n_side) * step
        for r in range(reps):
            z[n_side] = 0.0
            acc = 0.0
            for i in range(n_side):
                acc = acc + noise[r, i]
                z[n_side - 1 - i] = acc * scale + v[n_side - 1 - i] * v[n_side - 1 - i]
            acc = 0.0
            for i in range(n_side):
                acc = acc + noise[r, n_side + i]
                z[n_side + 1 + i] = acc * scale + v[n_side + 1 + i] * v[n_side + 1 + i]
            top = _hull(v, z, npts, hull)
            j = 1
            while j < top - 1 and v[hull[j]] < 0.0:
                j += 1
            a = hull[j - 1]
            b = hull[j]
            out[r] = (z[b] - z[a]) / (v[b] - v[a])
            if v[b] == 0.0 and j + 1 < top:
                a = hull[j + 1]
                out[r] = 0.5 * (out[r] + (z[a] - z[b]) / (v[a] - v[b]))
    free(v)
    free(z)
    free(hull)
    return out_arr
