"""Pure-numpy kernels: per-symbol information density for the scalar channel.

The per-symbol information density under a uniform cube input is

    i = ln f_z(z) - ln f(y | h),
    f(y|h) = (1/(a h)) * (Q(y/s - a h/(2 s)) - Q(y/s + a h/(2 s))),

with y = h x + z and s the noise standard deviation. The Q-difference is
evaluated in log space on the tails so deep underflow never silently reaches
zero; evaluations that would underflow a direct subtraction are counted and
reported to the caller.
"""

from __future__ import annotations

import numpy as np
from scipy.special import erfc as _erfc

_SQRT1_2 = np.sqrt(0.5)
_LN_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)
_TAIL_SWITCH = 36.0     # beyond this, erfc underflow risk: use the asymptotic series
_GUARD_LOG = -708.0     # direct double subtraction underflows below exp(-708)


def _log_q(x: np.ndarray) -> np.ndarray:
    """ln Q(x) elementwise for x >= 0."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    near = x <= _TAIL_SWITCH
    out[near] = np.log(0.5 * _erfc(x[near] * _SQRT1_2))
    far = ~near
    if np.any(far):
        xf = x[far]
        inv2 = 1.0 / (xf * xf)
        corr = np.log1p(inv2 * (-1.0 + inv2 * (3.0 - 15.0 * inv2)))
        out[far] = -0.5 * xf * xf - np.log(xf) - _LN_SQRT_2PI + corr
    return out


def _log_q_diff_tail(alpha: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """ln(Q(alpha) - Q(beta)) for 0 <= alpha < beta."""
    la = _log_q(alpha)
    lb = _log_q(beta)
    d = lb - la
    with np.errstate(divide="ignore"):
        out = la + np.log1p(-np.exp(np.minimum(d, 0.0)))
    # vanishing window (alpha ~ beta): midpoint density times width
    degenerate = ~np.isfinite(out)
    if np.any(degenerate):
        mid = 0.5 * (alpha[degenerate] + beta[degenerate])
        width = beta[degenerate] - alpha[degenerate]
        with np.errstate(divide="ignore"):
            out[degenerate] = np.log(width) - 0.5 * mid * mid - _LN_SQRT_2PI
    return out


def log_q_diff(alpha: np.ndarray, beta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """ln(Q(alpha) - Q(beta)) elementwise with alpha < beta.

    Returns (values, guarded) where guarded flags entries whose direct
    subtraction would have underflowed to zero.
    """
    alpha = np.asarray(alpha, dtype=np.float64)
    beta = np.asarray(beta, dtype=np.float64)
    out = np.empty_like(alpha)

    right = alpha >= 0.0
    left = beta <= 0.0
    mid = ~(right | left)

    if np.any(right):
        out[right] = _log_q_diff_tail(alpha[right], beta[right])
    if np.any(left):
        # mirror symmetry: Q(a) - Q(b) = Q(-b) - Q(-a)
        out[left] = _log_q_diff_tail(-beta[left], -alpha[left])
    if np.any(mid):
        a_m, b_m = alpha[mid], beta[mid]
        d = 0.5 * _erfc(a_m * _SQRT1_2) - 0.5 * _erfc(b_m * _SQRT1_2)
        vals = np.empty_like(d)
        pos = d > 0.0
        with np.errstate(divide="ignore"):
            vals[pos] = np.log(d[pos])
        if np.any(~pos):
            m = 0.5 * (a_m[~pos] + b_m[~pos])
            with np.errstate(divide="ignore"):
                vals[~pos] = np.log(b_m[~pos] - a_m[~pos]) - 0.5 * m * m - _LN_SQRT_2PI
        out[mid] = vals

    guarded = out < _GUARD_LOG
    return out, guarded


def scalar_info_density(
    x: np.ndarray, h: np.ndarray, z: np.ndarray, a: float, sigma: float
) -> tuple[np.ndarray, int]:
    """Per-symbol information densities for the real fading channel.

    x, h, z are flat arrays of equal length; returns (i, n_guarded).
    """
    x = np.asarray(x, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    y = h * x + z
    u = y / sigma
    v = (a * h) / (2.0 * sigma)
    ln_fy, guarded = log_q_diff(u - v, u + v)
    ln_fy = ln_fy - np.log(a * h)
    ln_fz = -0.5 * (z / sigma) ** 2 - _LN_SQRT_2PI - np.log(sigma)
    return ln_fz - ln_fy, int(np.count_nonzero(guarded))
