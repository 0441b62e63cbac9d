# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops.

Signatures and return conventions mirror :mod:`wh2mor._kernels_py` exactly;
:mod:`wh2mor.kernels` picks one of the two at import time.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt

cnp.import_array()

ctypedef double complex cplx


cdef inline double cabs2(cplx z) nogil:
    return z.real * z.real + z.imag * z.imag


cdef inline double cabs(cplx z) nogil:
    return sqrt(z.real * z.real + z.imag * z.imag)


def pr_eval(const cplx[::1] poles, const cplx[::1] residues, const cplx[::1] h2, cplx d,
            const cplx[::1] s, cplx[::1] out, double tol):
    """Evaluate ``d + sum r/(s-p) + sum h/(s-p)**2``; return first pole hit or -1."""
    cdef Py_ssize_t m = poles.shape[0], k = s.shape[0], i, j, hit = -1
    cdef cplx acc, z, inv
    with nogil:
        for i in range(k):
            acc = d
            for j in range(m):
                z = s[i] - poles[j]
                if cabs(z) <= tol * (1.0 + cabs(poles[j])):
                    hit = i
                    break
                inv = 1.0 / z
                acc = acc + residues[j] * inv + h2[j] * inv * inv
            if hit >= 0:
                break
            out[i] = acc
    return hit


def pr_deriv(const cplx[::1] poles, const cplx[::1] residues, const cplx[::1] h2,
             const cplx[::1] s, cplx[::1] out, double tol):
    """Evaluate ``-sum r/(s-p)**2 - 2 sum h/(s-p)**3``; return first pole hit or -1."""
    cdef Py_ssize_t m = poles.shape[0], k = s.shape[0], i, j, hit = -1
    cdef cplx acc, z, inv, inv2
    with nogil:
        for i in range(k):
            acc = 0
            for j in range(m):
                z = s[i] - poles[j]
                if cabs(z) <= tol * (1.0 + cabs(poles[j])):
                    hit = i
                    break
                inv = 1.0 / z
                inv2 = inv * inv
                acc = acc - residues[j] * inv2 - 2.0 * h2[j] * inv2 * inv
            if hit >= 0:
                break
            out[i] = acc
    return hit


def hess_eval(const cplx[:, ::1] H, const cplx[::1] bh, const cplx[::1] ch, cplx d,
              const cplx[::1] s, cplx[::1] out, double pivot_tol):
    """Evaluate ``ch^T (sI - H)^{-1} bh + d`` for upper Hessenberg ``H``.

    Gaussian elimination with adjacent-row partial pivoting, O(n^2) per point.
    Returns the index of the first point whose pivot drops below
    ``pivot_tol * ||sI - H||_inf``, or -1.
    """
    cdef Py_ssize_t n = H.shape[0], k = s.shape[0], i, r, col, jj
    cdef cnp.ndarray[cplx, ndim=2] Mw = np.empty((n, n), dtype=np.complex128)
    cdef cnp.ndarray[cplx, ndim=1] xw = np.empty(n, dtype=np.complex128)
    cdef cplx[:, ::1] M = Mw
    cdef cplx[::1] x = xw
    cdef cplx f, tmp, acc
    cdef double rownorm, mnorm, thresh
    for i in range(k):
        mnorm = 0.0
        for r in range(n):
            rownorm = 0.0
            for col in range(n):
                M[r, col] = -H[r, col]
            M[r, r] = M[r, r] + s[i]
            for col in range(n):
                rownorm += cabs(M[r, col])
            if rownorm > mnorm:
                mnorm = rownorm
            x[r] = bh[r]
        thresh = pivot_tol * mnorm
        for col in range(n - 1):
            if cabs2(M[col + 1, col]) > cabs2(M[col, col]):
                for jj in range(col, n):
                    tmp = M[col, jj]
                    M[col, jj] = M[col + 1, jj]
                    M[col + 1, jj] = tmp
                tmp = x[col]
                x[col] = x[col + 1]
                x[col + 1] = tmp
            if cabs(M[col, col]) <= thresh:
                return i
            f = M[col + 1, col] / M[col, col]
            if f != 0:
                for jj in range(col + 1, n):
                    M[col + 1, jj] = M[col + 1, jj] - f * M[col, jj]
                x[col + 1] = x[col + 1] - f * x[col]
        if n > 0 and cabs(M[n - 1, n - 1]) <= thresh:
            return i
        for r in range(n - 1, -1, -1):
            acc = x[r]
            for jj in range(r + 1, n):
                acc = acc - M[r, jj] * x[jj]
            x[r] = acc / M[r, r]
        acc = d
        for r in range(n):
            acc = acc + ch[r] * x[r]
        out[i] = acc
    return -1


def rk4(const double[:, ::1] At, const double[::1] bt, const double[::1] c, double d,
        const double[::1] u, const double[::1] umid, double dt, const double[::1] x0,
        double[::1] y):
    """Classical RK4 for ``x' = At x + bt u``, ``y = c^T x + d u``.

    ``u`` holds the input at the grid points, ``umid`` at the half steps.
    """
    cdef Py_ssize_t n = At.shape[0], steps = u.shape[0], k, i, j
    cdef cnp.ndarray[double, ndim=2] work = np.empty((6, n), dtype=np.float64)
    cdef double[:, ::1] w = work
    cdef double acc, half = 0.5 * dt, sixth = dt / 6.0
    # rows: 0 x, 1 k1, 2 k2, 3 k3, 4 k4, 5 stage argument
    with nogil:
        for i in range(n):
            w[0, i] = x0[i]
        for k in range(steps):
            acc = d * u[k]
            for i in range(n):
                acc = acc + c[i] * w[0, i]
            y[k] = acc
            if k == steps - 1:
                break
            for i in range(n):
                acc = bt[i] * u[k]
                for j in range(n):
                    acc = acc + At[i, j] * w[0, j]
                w[1, i] = acc
            for i in range(n):
                w[5, i] = w[0, i] + half * w[1, i]
            for i in range(n):
                acc = bt[i] * umid[k]
                for j in range(n):
                    acc = acc + At[i, j] * w[5, j]
                w[2, i] = acc
            for i in range(n):
                w[5, i] = w[0, i] + half * w[2, i]
            for i in range(n):
                acc = bt[i] * umid[k]
                for j in range(n):
                    acc = acc + At[i, j] * w[5, j]
                w[3, i] = acc
            for i in range(n):
                w[5, i] = w[0, i] + dt * w[3, i]
            for i in range(n):
                acc = bt[i] * u[k + 1]
                for j in range(n):
                    acc = acc + At[i, j] * w[5, j]
                w[4, i] = acc
            for i in range(n):
                w[0, i] = w[0, i] + sixth * (w[1, i] + 2.0 * w[2, i]
                                             + 2.0 * w[3, i] + w[4, i])
    return None
