# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: per-symbol information density for the scalar channel.

Same contract as the numpy fallback in _pykern; a fused C loop avoids the
temporary arrays of the vectorized path.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport erfc, exp, log, log1p, isfinite

cnp.import_array()

cdef double _SQRT1_2 = 0.7071067811865476
cdef double _LN_SQRT_2PI = 0.9189385332046727
cdef double _TAIL_SWITCH = 36.0
cdef double _GUARD_LOG = -708.0


cdef inline double _log_q(double x) nogil:
    """ln Q(x) for x >= 0."""
    cdef double inv2
    if x <= _TAIL_SWITCH:
        return log(0.5 * erfc(x * _SQRT1_2))
    inv2 = 1.0 / (x * x)
    return -0.5 * x * x - log(x) - _LN_SQRT_2PI \
        + log1p(inv2 * (-1.0 + inv2 * (3.0 - 15.0 * inv2)))


cdef inline double _log_q_diff_tail(double alpha, double beta) nogil:
    """ln(Q(alpha) - Q(beta)) for 0 <= alpha < beta."""
    cdef double la = _log_q(alpha)
    cdef double lb = _log_q(beta)
    cdef double d = lb - la
    cdef double out, mid
    if d > 0.0:
        d = 0.0
    out = la + log1p(-exp(d))
    if isfinite(out):
        return out
    mid = 0.5 * (alpha + beta)
    return log(beta - alpha) - 0.5 * mid * mid - _LN_SQRT_2PI


cdef inline double _log_q_diff(double alpha, double beta) nogil:
    cdef double d, mid
    if alpha >= 0.0:
        return _log_q_diff_tail(alpha, beta)
    if beta <= 0.0:
        return _log_q_diff_tail(-beta, -alpha)
    d = 0.5 * erfc(alpha * _SQRT1_2) - 0.5 * erfc(beta * _SQRT1_2)
    if d > 0.0:
        return log(d)
    mid = 0.5 * (alpha + beta)
    return log(beta - alpha) - 0.5 * mid * mid - _LN_SQRT_2PI


def log_q_diff(object alpha_in, object beta_in):
    """Elementwise ln(Q(alpha) - Q(beta)); mirrors _pykern.log_q_diff."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] alpha = \
        np.ascontiguousarray(alpha_in, dtype=np.float64).ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] beta = \
        np.ascontiguousarray(beta_in, dtype=np.float64).ravel()
    cdef Py_ssize_t n = alpha.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] guarded = np.zeros(n, dtype=np.uint8)
    cdef Py_ssize_t i
    cdef double v
    for i in range(n):
        v = _log_q_diff(alpha[i], beta[i])
        out[i] = v
        if v < _GUARD_LOG:
            guarded[i] = 1
    return out, guarded.view(np.bool_)


def scalar_info_density(object x_in, object h_in, object z_in, double a, double sigma):
    """Per-symbol information densities; mirrors _pykern.scalar_info_density."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] x = \
        np.ascontiguousarray(x_in, dtype=np.float64).ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] h = \
        np.ascontiguousarray(h_in, dtype=np.float64).ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] z = \
        np.ascontiguousarray(z_in, dtype=np.float64).ravel()
    cdef Py_ssize_t n = x.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef Py_ssize_t i
    cdef long n_guarded = 0
    cdef double y, u, v, ln_fy, ln_fz, zs, d
    cdef double ln_sigma = log(sigma)
    with nogil:
        for i in range(n):
            y = h[i] * x[i] + z[i]
            u = y / sigma
            v = (a * h[i]) / (2.0 * sigma)
            d = _log_q_diff(u - v, u + v)
            if d < _GUARD_LOG:
                n_guarded += 1
            ln_fy = d - log(a * h[i])
            zs = z[i] / sigma
            ln_fz = -0.5 * zs * zs - _LN_SQRT_2PI - ln_sigma
            out[i] = ln_fz - ln_fy
    return out, n_guarded
