# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled RK4 loops for the built-in frames.

Frame codes: 0 euclidean (k = n), 1 coordinate plane (first k axes),
2 Heisenberg, 3 Martinet. Results agree with ``_pykernels`` to rounding.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()

DEF MAXN = 64


cdef inline void velocity(int code, int n, int k, const double* x, const double* u, double* out) noexcept nogil:
    cdef int i
    if code == 0:
        for i in range(n):
            out[i] = u[i]
    elif code == 1:
        for i in range(n):
            out[i] = u[i] if i < k else 0.0
    elif code == 2:
        out[0] = u[0]
        out[1] = u[1]
        out[2] = 0.5 * (x[0] * u[1] - x[1] * u[0])
    else:
        out[0] = u[0]
        out[1] = u[1]
        out[2] = x[0] * x[0] * u[1]


cdef inline int project(int code, int n, int k, const double* x, const double* v, double* out) noexcept nogil:
    # returns 1 if the 2x2 Gram system is singular
    cdef int i
    cdef double a2, b2, g00, g01, g11, r0, r1, det, c0, c1
    if code == 0:
        for i in range(n):
            out[i] = v[i]
        return 0
    if code == 1:
        for i in range(n):
            out[i] = v[i] if i < k else 0.0
        return 0
    if code == 2:
        a2 = -0.5 * x[1]
        b2 = 0.5 * x[0]
    else:
        a2 = 0.0
        b2 = x[0] * x[0]
    # columns a = (1, 0, a2), b = (0, 1, b2)
    g00 = 1.0 + a2 * a2
    g01 = a2 * b2
    g11 = 1.0 + b2 * b2
    r0 = v[0] + a2 * v[2]
    r1 = v[1] + b2 * v[2]
    det = g00 * g11 - g01 * g01
    if fabs(det) < 1e-300:
        return 1
    c0 = (g11 * r0 - g01 * r1) / det
    c1 = (g00 * r1 - g01 * r0) / det
    out[0] = c0
    out[1] = c1
    out[2] = c0 * a2 + c1 * b2
    return 0


cdef inline double sqnorm(int n, const double* w) noexcept nogil:
    cdef int i
    cdef double s = 0.0
    for i in range(n):
        s += w[i] * w[i]
    return s


def rollout_batch(int code, int n, int k, double[::1] x0, double[:, :, ::1] controls,
                  double duration, int substeps):
    """Endpoints and Euclidean energies of a batch of piecewise-constant-control trajectories."""
    cdef Py_ssize_t B = controls.shape[0]
    cdef Py_ssize_t M = controls.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] ends_arr = np.empty((B, n))
    cdef cnp.ndarray[cnp.float64_t, ndim=1] energy_arr = np.empty(B)
    cdef double[:, ::1] ends = ends_arr
    cdef double[::1] energy = energy_arr
    cdef double h = duration / (M * substeps)
    cdef double x[MAXN]
    cdef double y[MAXN]
    cdef double k1[MAXN]
    cdef double k2[MAXN]
    cdef double k3[MAXN]
    cdef double k4[MAXN]
    cdef double e, s1, s2, s3, s4
    cdef Py_ssize_t b, j
    cdef int s, i
    cdef const double* u
    if n > MAXN:
        raise ValueError("dimension too large for compiled kernel")
    with nogil:
        for b in range(B):
            for i in range(n):
                x[i] = x0[i]
            e = 0.0
            for j in range(M):
                u = &controls[b, j, 0]
                for s in range(substeps):
                    velocity(code, n, k, x, u, k1)
                    s1 = sqnorm(n, k1)
                    for i in range(n):
                        y[i] = x[i] + 0.5 * h * k1[i]
                    velocity(code, n, k, y, u, k2)
                    s2 = sqnorm(n, k2)
                    for i in range(n):
                        y[i] = x[i] + 0.5 * h * k2[i]
                    velocity(code, n, k, y, u, k3)
                    s3 = sqnorm(n, k3)
                    for i in range(n):
                        y[i] = x[i] + h * k3[i]
                    velocity(code, n, k, y, u, k4)
                    s4 = sqnorm(n, k4)
                    for i in range(n):
                        x[i] = x[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
                    e = e + (h / 6.0) * (s1 + 2.0 * s2 + 2.0 * s3 + s4)
            for i in range(n):
                ends[b, i] = x[i]
            energy[b] = e
    return ends_arr, energy_arr


def rollout_path(int code, int n, int k, double[::1] x0, double[:, ::1] controls,
                 double duration, int substeps):
    """Dense samples of one trajectory, shape ``(M*substeps + 1, n)``."""
    cdef Py_ssize_t M = controls.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out_arr = np.empty((M * substeps + 1, n))
    cdef double[:, ::1] out = out_arr
    cdef double h = duration / (M * substeps)
    cdef double x[MAXN]
    cdef double y[MAXN]
    cdef double k1[MAXN]
    cdef double k2[MAXN]
    cdef double k3[MAXN]
    cdef double k4[MAXN]
    cdef Py_ssize_t j, row = 1
    cdef int s, i
    cdef const double* u
    if n > MAXN:
        raise ValueError("dimension too large for compiled kernel")
    with nogil:
        for i in range(n):
            x[i] = x0[i]
            out[0, i] = x[i]
        for j in range(M):
            u = &controls[j, 0]
            for s in range(substeps):
                velocity(code, n, k, x, u, k1)
                for i in range(n):
                    y[i] = x[i] + 0.5 * h * k1[i]
                velocity(code, n, k, y, u, k2)
                for i in range(n):
                    y[i] = x[i] + 0.5 * h * k2[i]
                velocity(code, n, k, y, u, k3)
                for i in range(n):
                    y[i] = x[i] + h * k3[i]
                velocity(code, n, k, y, u, k4)
                for i in range(n):
                    x[i] = x[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
                    out[row, i] = x[i]
                row += 1
    return out_arr


def projected_flow(int code, int n, int k, double[::1] p, double[::1] v, double h, Py_ssize_t nsteps):
    """RK4 samples of the integral curve of ``x -> proj_{D_x}(v)``.

    Returns ``(samples, bad_step)``; ``bad_step`` is -1 unless the frame
    degenerated, in which case samples stop at that step.
    """
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out_arr = np.empty((nsteps + 1, n))
    cdef double[:, ::1] out = out_arr
    cdef double x[MAXN]
    cdef double y[MAXN]
    cdef double k1[MAXN]
    cdef double k2[MAXN]
    cdef double k3[MAXN]
    cdef double k4[MAXN]
    cdef Py_ssize_t step, bad = -1
    cdef int i, flag
    if n > MAXN:
        raise ValueError("dimension too large for compiled kernel")
    with nogil:
        for i in range(n):
            x[i] = p[i]
            out[0, i] = x[i]
        for step in range(nsteps):
            flag = project(code, n, k, x, &v[0], k1)
            for i in range(n):
                y[i] = x[i] + 0.5 * h * k1[i]
            flag = flag | project(code, n, k, y, &v[0], k2)
            for i in range(n):
                y[i] = x[i] + 0.5 * h * k2[i]
            flag = flag | project(code, n, k, y, &v[0], k3)
            for i in range(n):
                y[i] = x[i] + h * k3[i]
            flag = flag | project(code, n, k, y, &v[0], k4)
            if flag:
                bad = step
                break
            for i in range(n):
                x[i] = x[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
                out[step + 1, i] = x[i]
    if bad >= 0:
        return out_arr[:bad + 1].copy(), bad
    return out_arr, -1
