# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled dense-coding capacity kernels.

Same contract as ``_kernels_py``: ``basis`` is ``(K0, Kplus, Kminus)`` with the
state ``K0 + e^{2r} Kplus + e^{-2r} Kminus``; beam splitters are given as
angles with ``t = cos(theta)``, ``R = sin(theta)``.
"""

import numpy as np
from libc.math cimport cos, exp, log1p, sin, INFINITY


cdef struct Blocks:
    double gx[3][3]
    double gp[3][3]
    double n0


cdef inline void _blocks(const double[:, :, ::1] basis, double r, Blocks* out) noexcept nogil:
    cdef double e = exp(2.0 * r)
    cdef double ei = exp(-2.0 * r)
    cdef int i, j
    for i in range(3):
        for j in range(3):
            out.gx[i][j] = (basis[0, 2 * i, 2 * j] + e * basis[1, 2 * i, 2 * j]
                            + ei * basis[2, 2 * i, 2 * j])
            out.gp[i][j] = (basis[0, 2 * i + 1, 2 * j + 1] + e * basis[1, 2 * i + 1, 2 * j + 1]
                            + ei * basis[2, 2 * i + 1, 2 * j + 1])
    out.n0 = (out.gx[0][0] + out.gp[0][0]) / 4.0 - 0.5


cdef inline double _quad(double m[3][3], double* u, double* v) noexcept nogil:
    cdef double acc = 0.0
    cdef int i, j
    for i in range(3):
        for j in range(3):
            acc += u[i] * m[i][j] * v[j]
    return acc


cdef inline double _evaluate(Blocks* blk, double th1, double th2, double nbar,
                             bint free_gain, double* gain_out, double* power_out) noexcept nogil:
    cdef double power = nbar - blk.n0
    power_out[0] = power
    gain_out[0] = 0.0
    if power < 0.0:
        return -INFINITY
    cdef double t1 = cos(th1), s1 = sin(th1), t2 = cos(th2), s2 = sin(th2)
    cdef double wx[3]
    cdef double a[3]
    cdef double b[3]
    cdef double v[3]
    wx[0] = t2
    wx[1] = s2 * t1
    wx[2] = s2 * s1
    a[0] = s2
    a[1] = -t2 * t1
    a[2] = -t2 * s1
    b[0] = 0.0
    b[1] = -t2 * s1
    b[2] = t2 * t1
    cdef double nx = _quad(blk.gx, wx, wx)
    cdef double bb = _quad(blk.gp, b, b)
    cdef double gain = 0.0
    if free_gain and bb > 0.0:
        gain = -_quad(blk.gp, a, b) / bb
    cdef int i
    for i in range(3):
        v[i] = a[i] + gain * b[i]
    cdef double npow = _quad(blk.gp, v, v)
    gain_out[0] = gain
    return 0.5 * log1p(2.0 * power * t2 * t2 / nx) + 0.5 * log1p(2.0 * power * s2 * s2 / npow)


def capacity_point(basis, double r, double th1, double th2, double nbar, bint free_gain=True):
    """Return ``(capacity, gain, signal_power)``; capacity is ``-inf`` if infeasible."""
    cdef const double[:, :, ::1] b = np.ascontiguousarray(basis, dtype=np.float64)
    cdef Blocks blk
    cdef double gain, power, cap
    _blocks(b, r, &blk)
    cap = _evaluate(&blk, th1, th2, nbar, free_gain, &gain, &power)
    return cap, gain, power


def capacity_grid(basis, rs, th1s, th2s, double nbar, bint free_gain=True):
    """Capacity and optimal gain on the full ``rs x th1s x th2s`` grid."""
    cdef const double[:, :, ::1] b = np.ascontiguousarray(basis, dtype=np.float64)
    cdef const double[::1] r_v = np.ascontiguousarray(rs, dtype=np.float64)
    cdef const double[::1] t1_v = np.ascontiguousarray(th1s, dtype=np.float64)
    cdef const double[::1] t2_v = np.ascontiguousarray(th2s, dtype=np.float64)
    caps = np.empty((r_v.shape[0], t1_v.shape[0], t2_v.shape[0]))
    gains = np.empty_like(caps)
    cdef double[:, :, ::1] c_v = caps
    cdef double[:, :, ::1] g_v = gains
    cdef Blocks blk
    cdef double gain, power
    cdef Py_ssize_t k, i, j
    with nogil:
        for k in range(r_v.shape[0]):
            _blocks(b, r_v[k], &blk)
            for i in range(t1_v.shape[0]):
                for j in range(t2_v.shape[0]):
                    c_v[k, i, j] = _evaluate(&blk, t1_v[i], t2_v[j], nbar, free_gain, &gain, &power)
                    g_v[k, i, j] = gain
    return caps, gains
