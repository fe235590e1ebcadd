# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled RK4 kernel for Lur'e right-hand sides.

Same interface as ``_kernels_py``; selected at import by ``qstc.kernels``.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, isfinite
from libc.stdlib cimport malloc, free

from .errors import DomainError, IntegrationError

cnp.import_array()

PHI_ZERO = 0
PHI_LINEAR = 1
PHI_SQRT_SHIFT = 2


cdef inline int _phi(int kind, double p0, double p1, double sqrt_p1,
                     double z, double* out) noexcept nogil:
    cdef double s
    if kind == 0:
        out[0] = 0.0
    elif kind == 1:
        out[0] = p0 * z
    elif kind == 2:
        s = p1 + z
        if s < 0.0:
            return -1
        out[0] = p0 * sqrt(s) - p0 * sqrt_p1 - z
    else:
        return -2
    return 0


cdef inline int _rhs(int n, const double[:, ::1] M, const double* b,
                     const double* xi, const double* eta, int kind,
                     double p0, double p1, double sqrt_p1,
                     const double* x, double* out, double* zbad) noexcept nogil:
    cdef int i, j, rc
    cdef double z = 0.0, ph, acc
    for j in range(n):
        z += eta[j] * x[j]
    rc = _phi(kind, p0, p1, sqrt_p1, z, &ph)
    if rc != 0:
        zbad[0] = z
        return rc
    for i in range(n):
        acc = b[i] + xi[i] * ph
        for j in range(n):
            acc += M[i, j] * x[j]
        out[i] = acc
    return 0


def phi_value(int kind, double p0, double p1, double z):
    cdef double out
    cdef double sp1 = sqrt(p1) if (kind == 2 and p1 >= 0.0) else 0.0
    cdef int rc = _phi(kind, p0, p1, sp1, z, &out)
    if rc == -1:
        raise DomainError(f"sqrt_shift evaluated at z={z!r} < -H={-p1!r}")
    if rc == -2:
        raise ValueError(f"unknown nonlinearity code {kind}")
    return out


def lure_rk4(M, bias, xi, eta, int kind, params, x0, double dt, Py_ssize_t nsteps):
    """Classical RK4 for ``x' = M x + bias + xi * phi(eta . x)``.

    Returns an ``(nsteps + 1, n)`` array whose first row is ``x0``.
    """
    cdef const double[:, ::1] Mv = np.ascontiguousarray(M, dtype=np.float64)
    cdef double[::1] bv = np.ascontiguousarray(bias, dtype=np.float64).copy()
    cdef double[::1] xiv = np.ascontiguousarray(xi, dtype=np.float64).copy()
    cdef double[::1] etav = np.ascontiguousarray(eta, dtype=np.float64).copy()
    cdef double[::1] x0v = np.ascontiguousarray(x0, dtype=np.float64).copy()
    cdef int n = <int>x0v.shape[0]
    if Mv.shape[0] != n or Mv.shape[1] != n or bv.shape[0] != n \
            or xiv.shape[0] != n or etav.shape[0] != n:
        raise ValueError("inconsistent dimensions")
    if kind < 0 or kind > 2:
        raise ValueError(f"unknown nonlinearity code {kind}")
    cdef double p0 = float(params[0])
    cdef double p1 = float(params[1])
    cdef double sqrt_p1 = sqrt(p1) if (kind == 2 and p1 >= 0.0) else 0.0

    out_arr = np.empty((nsteps + 1, n), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double* work = <double*>malloc(6 * n * sizeof(double))
    if work == NULL:
        raise MemoryError()
    cdef double* x = work
    cdef double* k1 = work + n
    cdef double* k2 = work + 2 * n
    cdef double* k3 = work + 3 * n
    cdef double* k4 = work + 4 * n
    cdef double* tmp = work + 5 * n
    cdef double half = 0.5 * dt, sixth = dt / 6.0, zbad = 0.0, s
    cdef Py_ssize_t step = 0
    cdef int i, rc = 0, bad = 0
    try:
        for i in range(n):
            x[i] = x0v[i]
            out[0, i] = x[i]
        with nogil:
            for step in range(nsteps):
                rc = _rhs(n, Mv, &bv[0], &xiv[0], &etav[0], kind, p0, p1, sqrt_p1, x, k1, &zbad)
                if rc != 0:
                    break
                for i in range(n):
                    tmp[i] = x[i] + half * k1[i]
                rc = _rhs(n, Mv, &bv[0], &xiv[0], &etav[0], kind, p0, p1, sqrt_p1, tmp, k2, &zbad)
                if rc != 0:
                    break
                for i in range(n):
                    tmp[i] = x[i] + half * k2[i]
                rc = _rhs(n, Mv, &bv[0], &xiv[0], &etav[0], kind, p0, p1, sqrt_p1, tmp, k3, &zbad)
                if rc != 0:
                    break
                for i in range(n):
                    tmp[i] = x[i] + dt * k3[i]
                rc = _rhs(n, Mv, &bv[0], &xiv[0], &etav[0], kind, p0, p1, sqrt_p1, tmp, k4, &zbad)
                if rc != 0:
                    break
                s = 0.0
                for i in range(n):
                    x[i] = x[i] + sixth * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
                    out[step + 1, i] = x[i]
                    s += x[i]
                if not isfinite(s):
                    bad = 1
                    break
    finally:
        free(work)
    if rc == -1:
        raise DomainError(
            f"sqrt_shift evaluated at z={zbad!r} < -H={-p1!r} (t={step * dt!r})"
        )
    if bad:
        raise IntegrationError(f"non-finite state after {step + 1} steps", (step + 1) * dt)
    return out_arr
