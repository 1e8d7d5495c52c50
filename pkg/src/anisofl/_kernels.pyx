# cython: language_level=3
"""Fused single-block loss/gradient kernel.

Each unit's activation pattern on a tensor grid row is a contiguous range
(the pre-activation is affine in x), so both passes visit only a superset of
the active cells, test the exact sign, and accumulate in a fixed order:
units outer, rows middle, columns inner.  Results are deterministic for a
given input and agree with the NumPy fallback to rounding error.
"""

import numpy as np

from libc.math cimport ceil as c_ceil, floor as c_floor, pow as c_pow

backend_name = "cython"


cdef inline void _row_range(double alpha, double beta, double x0, double h,
                            Py_ssize_t nx, Py_ssize_t *klo, Py_ssize_t *khi) nogil:
    """Conservative contiguous index range containing every z > 0 cell."""
    cdef double s
    if beta > 0.0:
        s = (-alpha / beta - x0) / h
        if s >= <double> nx:
            klo[0] = 0
            khi[0] = 0
            return
        if s < 1.0:
            klo[0] = 0
        else:
            klo[0] = <Py_ssize_t> c_floor(s) - 1
        khi[0] = nx
    elif beta < 0.0:
        s = (-alpha / beta - x0) / h
        if s <= -1.0:
            klo[0] = 0
            khi[0] = 0
            return
        klo[0] = 0
        if s >= <double> (nx - 1):
            khi[0] = nx
        else:
            khi[0] = <Py_ssize_t> c_ceil(s) + 1
            if khi[0] > nx:
                khi[0] = nx
    else:
        if alpha > 0.0:
            klo[0] = 0
            khi[0] = nx
        else:
            klo[0] = 0
            khi[0] = 0


cdef void _forward_pass(double[::1] w, double[::1] wt, double[::1] wx,
                        double[::1] b, int m, double[::1] t, double[::1] x,
                        double[:, ::1] P, double[:, ::1] D) nogil:
    cdef Py_ssize_t n = w.shape[0], nt = t.shape[0], nx = x.shape[0]
    cdef Py_ssize_t j, i, k, klo, khi
    cdef double alpha, beta, wj, coef, z, x0, h
    x0 = x[0]
    h = x[1] - x[0]
    for j in range(n):
        beta = wx[j]
        wj = w[j]
        coef = m * wj * beta
        for i in range(nt):
            alpha = wt[j] * t[i] + b[j]
            _row_range(alpha, beta, x0, h, nx, &klo, &khi)
            if m == 2:
                for k in range(klo, khi):
                    z = alpha + beta * x[k]
                    if z > 0.0:
                        P[i, k] += wj * z * z
                        D[i, k] += coef * z
            elif m == 1:
                for k in range(klo, khi):
                    z = alpha + beta * x[k]
                    if z > 0.0:
                        P[i, k] += wj * z
                        D[i, k] += coef
            else:
                for k in range(klo, khi):
                    z = alpha + beta * x[k]
                    if z > 0.0:
                        P[i, k] += wj * c_pow(z, m)
                        D[i, k] += coef * c_pow(z, m - 1)


cdef void _backward_pass(double[::1] w, double[::1] wt, double[::1] wx,
                         double[::1] b, int m, double[::1] t, double[::1] x,
                         double[:, ::1] R0, double[:, ::1] R1,
                         double[::1] gw, double[::1] gwt, double[::1] gwx,
                         double[::1] gb) nogil:
    cdef Py_ssize_t n = w.shape[0], nt = t.shape[0], nx = x.shape[0]
    cdef Py_ssize_t j, i, k, klo, khi
    cdef double alpha, beta, wj, z, q0, q1, gz, x0, h
    cdef double am, am1, am2
    cdef double sw, sb, swt, swx, row_gz, row_gzx, row_w, row_dir
    x0 = x[0]
    h = x[1] - x[0]
    for j in range(n):
        beta = wx[j]
        wj = w[j]
        sw = 0.0
        sb = 0.0
        swt = 0.0
        swx = 0.0
        for i in range(nt):
            alpha = wt[j] * t[i] + b[j]
            _row_range(alpha, beta, x0, h, nx, &klo, &khi)
            row_gz = 0.0
            row_gzx = 0.0
            row_w = 0.0
            row_dir = 0.0
            if m == 2:
                for k in range(klo, khi):
                    z = alpha + beta * x[k]
                    if z > 0.0:
                        q0 = R0[i, k]
                        q1 = R1[i, k]
                        row_w += q0 * z * z + 2.0 * beta * q1 * z
                        gz = 2.0 * wj * (q0 * z + beta * q1)
                        row_gz += gz
                        row_gzx += gz * x[k]
                        row_dir += q1 * z
                row_dir *= 2.0 * wj
            elif m == 1:
                for k in range(klo, khi):
                    z = alpha + beta * x[k]
                    if z > 0.0:
                        q0 = R0[i, k]
                        q1 = R1[i, k]
                        row_w += q0 * z + beta * q1
                        gz = wj * q0
                        row_gz += gz
                        row_gzx += gz * x[k]
                        row_dir += q1
                row_dir *= wj
            else:
                for k in range(klo, khi):
                    z = alpha + beta * x[k]
                    if z > 0.0:
                        q0 = R0[i, k]
                        q1 = R1[i, k]
                        am = c_pow(z, m)
                        am1 = c_pow(z, m - 1)
                        am2 = c_pow(z, m - 2)
                        row_w += q0 * am + m * beta * q1 * am1
                        gz = wj * m * (q0 * am1 + (m - 1) * beta * q1 * am2)
                        row_gz += gz
                        row_gzx += gz * x[k]
                        row_dir += q1 * am1
                row_dir *= m * wj
            sw += row_w
            sb += row_gz
            swt += row_gz * t[i]
            swx += row_gzx + row_dir
        gw[j] = sw
        gwt[j] = swt
        gwx[j] = swx
        gb[j] = sb


def single_block_loss_grad(w, wt, wx, b, double c, int m, t, x, f, g, wq):
    """Loss and gradient for sum_j w_j (wt_j t + wx_j x + b_j)_+^m + c.

    Mirrors the NumPy fallback: returns (loss, (gw, gwt, gwx, gb, gc)).
    """
    if m < 1:
        raise ValueError("ramp degree m must be >= 1")
    w = np.ascontiguousarray(w, dtype=np.float64)
    wt = np.ascontiguousarray(wt, dtype=np.float64)
    wx = np.ascontiguousarray(wx, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    t = np.ascontiguousarray(t, dtype=np.float64)
    x = np.ascontiguousarray(x, dtype=np.float64)
    f = np.ascontiguousarray(f, dtype=np.float64)
    g = np.ascontiguousarray(g, dtype=np.float64)
    wq = np.ascontiguousarray(wq, dtype=np.float64)
    if x.shape[0] < 2:
        raise ValueError("need at least two x nodes")
    cdef Py_ssize_t n = w.shape[0]
    P = np.zeros((t.shape[0], x.shape[0]))
    D = np.zeros((t.shape[0], x.shape[0]))
    _forward_pass(w, wt, wx, b, m, t, x, P, D)
    r0 = P + c - f
    r1 = D - g
    loss = float(np.sum(wq * (r0 * r0 + r1 * r1)))
    R0 = np.ascontiguousarray(2.0 * wq * r0)
    R1 = np.ascontiguousarray(2.0 * wq * r1)
    gw = np.zeros(n)
    gwt = np.zeros(n)
    gwx = np.zeros(n)
    gb = np.zeros(n)
    _backward_pass(w, wt, wx, b, m, t, x, R0, R1, gw, gwt, gwx, gb)
    gc = float(np.sum(R0))
    return loss, (gw, gwt, gwx, gb, gc)
