"""Exact MIMO capacity/dispersion closed forms and comparisons.

All harmonic-type partial sums are evaluated by direct summation; empty sums
(lower bound above upper bound) are zero, matching the t=1 specializations.
Every closed form has an independent digamma/trigamma path used by the test
suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConstraintError, DomainError
from .numerics import (
    EULER_GAMMA,
    QuadratureSpec,
    digamma,
    integrate,
    laguerre_assoc,
    ln_gamma,
    q_inverse,
    trigamma,
)
from .scalar import DB_PER_NAT_COMPLEX, DispersionResult, FiniteBlocklengthPoint

__all__ = [
    "MimoConfig",
    "BdutResult",
    "mimo_capacity_fdt",
    "mimo_dispersion_fdt",
    "mimo_capacity_fdt_psi",
    "mimo_dispersion_fdt_psi",
    "parallel_capacity_dispersion",
    "mimo_vs_parallel_gaps",
    "bdut_optimize",
    "telatar_capacity",
    "oyman_approx",
    "mimo_achievable_nld",
]

_PI_E = math.pi * math.e


@dataclass(frozen=True)
class MimoConfig:
    """t transmit / r receive antennas with t <= r; sigma2 per receive dimension."""

    t: int
    r: int
    sigma2: float = 1.0

    def __post_init__(self):
        if self.t < 1 or self.r < 1:
            raise ConstraintError("antenna counts must be >= 1")
        if self.t > self.r:
            raise ConstraintError(
                f"t <= r is required (t={self.t}, r={self.r}); t > r is out of scope"
            )
        if not self.sigma2 > 0.0:
            raise DomainError("sigma2 must be positive")


@dataclass(frozen=True)
class BdutResult:
    """Dimension-optimized transmission: outputs are BDUT-constrained values.

    Whether the block-diagonal unitary scheme attains the unconstrained
    optimum is open; these are the best values over i in [1, t] active
    transmit dimensions.
    """

    t_opt: int
    delta_star: float
    v: float
    crossovers: tuple[float, ...]


def _harmonic(lo: int, hi: int, power: int = 1) -> float:
    """sum_{p=lo}^{hi} 1/p^power, empty when lo > hi."""
    return sum(1.0 / p ** power for p in range(lo, hi + 1))


def mimo_capacity_fdt(cfg: MimoConfig) -> float:
    """Capacity (nats/use) of full-dimensional transmission, exact finite sums."""
    t, r = cfg.t, cfg.r
    return (
        -EULER_GAMMA * t + 1.0 - t
        + t * _harmonic(1, r - t)
        + r * _harmonic(r - t + 1, r - 1)
        - t * math.log(_PI_E * cfg.sigma2)
    )


def mimo_dispersion_fdt(cfg: MimoConfig) -> float:
    """Dispersion (nats^2) of full-dimensional transmission, exact finite sums."""
    t, r = cfg.t, cfg.r
    return (
        t + math.pi ** 2 * t / 6.0
        - t * _harmonic(1, r - t, power=2)
        - sum((r - p) / p ** 2 for p in range(r - t + 1, r))
    )


def mimo_capacity_fdt_psi(cfg: MimoConfig) -> float:
    """Digamma route to the same capacity: sum psi(r-i+1) - t ln(pi e sigma2)."""
    s = sum(digamma(cfg.r - i + 1) for i in range(1, cfg.t + 1))
    return s - cfg.t * math.log(_PI_E * cfg.sigma2)


def mimo_dispersion_fdt_psi(cfg: MimoConfig) -> float:
    """Trigamma route to the same dispersion: t + sum psi'(r-i+1)."""
    return cfg.t + sum(trigamma(cfg.r - i + 1) for i in range(1, cfg.t + 1))


def parallel_capacity_dispersion(L: int, sigma2: float) -> DispersionResult:
    """L independent complex Rayleigh channels: L x the scalar complex values."""
    if L < 1:
        raise DomainError("need at least one parallel channel")
    if not sigma2 > 0.0:
        raise DomainError("sigma2 must be positive")
    delta = -EULER_GAMMA * L - L * math.log(_PI_E * sigma2)
    v = L + math.pi ** 2 * L / 6.0
    return DispersionResult(delta, v, "parallel", sigma2)


def mimo_vs_parallel_gaps(t: int) -> tuple[float, float, float]:
    """(capacity gap nats/use, dispersion gap nats^2, VNR gap dB) at t x t.

    The MIMO channel beats t parallel channels on all three; each gap is
    zero at t = 1.
    """
    if t < 1:
        raise DomainError("t must be >= 1")
    delta_gap = 1.0 - t + t * _harmonic(1, t - 1)
    v_gap = sum((t - p) / p ** 2 for p in range(1, t))
    vnr_gap_db = DB_PER_NAT_COMPLEX * delta_gap / t
    return delta_gap, v_gap, vnr_gap_db


def _fdt_intercept(i: int, r: int) -> float:
    """sigma2-independent part of the FDT capacity with i active antennas."""
    return mimo_capacity_fdt(MimoConfig(i, r, 1.0))


def bdut_optimize(cfg: MimoConfig) -> BdutResult:
    """Best number of active transmit dimensions at the given noise level.

    delta_star(i, r) is linear in ln(1/sigma2) with slope i, so the optimal
    region structure is the upper envelope of t lines; crossovers are exact.
    Ties break toward fewer antennas.
    """
    t, r = cfg.t, cfg.r
    x = math.log(1.0 / cfg.sigma2)
    intercepts = [_fdt_intercept(i, r) for i in range(1, t + 1)]
    values = [a + (i + 1) * x for i, a in enumerate(intercepts)]
    t_opt = int(np.argmax(values)) + 1  # argmax keeps the first (smallest) index on ties
    crossovers = []
    # upper envelope of lines y = a_i + i*x (slopes strictly increasing in i)
    hull: list[int] = []
    for i in range(t):
        while len(hull) >= 1:
            j = hull[-1]
            x_ij = intercepts[j] - intercepts[i]  # / (i - j) slope diff
            x_ij /= (i - j)
            if len(hull) >= 2:
                jj = hull[-2]
                x_prev = (intercepts[jj] - intercepts[j]) / (j - jj)
                if x_ij <= x_prev:
                    hull.pop()
                    continue
            break
        hull.append(i)
    for a, b in zip(hull[:-1], hull[1:]):
        x_ab = (intercepts[a] - intercepts[b]) / (b - a)
        crossovers.append(math.exp(x_ab))
    opt_cfg = MimoConfig(t_opt, r, cfg.sigma2)
    return BdutResult(
        t_opt=t_opt,
        delta_star=mimo_capacity_fdt(opt_cfg),
        v=mimo_dispersion_fdt(opt_cfg),
        crossovers=tuple(crossovers),
    )


def telatar_capacity(
    cfg: MimoConfig, snr: float, spec: QuadratureSpec = QuadratureSpec(kind="gauss-laguerre")
) -> float:
    """Ergodic power-constrained capacity E{ln det(I + SNR H^dagger H)}.

    Evaluated as the one-dimensional eigenvalue-density integral over the
    half line: sum of squared Laguerre polynomials against the lambda^{l-m}
    e^{-lambda} weight.
    """
    if not snr > 0.0:
        raise DomainError("snr must be positive")
    m, l = min(cfg.t, cfg.r), max(cfg.t, cfg.r)
    d = l - m
    # k!/(k+d)! prefactors, kept in log space
    log_pref = [ln_gamma(k + 1.0) - ln_gamma(k + d + 1.0) for k in range(m)]

    def integrand(lam: float) -> float:
        if lam <= 0.0:
            return 0.0
        density = 0.0
        for k in range(m):
            p = laguerre_assoc(k, d, lam)
            density += math.exp(log_pref[k] + d * math.log(lam) - lam) * p * p
        return math.log1p(snr * lam) * density

    return integrate(integrand, spec, (0.0, math.inf))


def oyman_approx(cfg: MimoConfig, snr: float) -> tuple[float, float]:
    """High-SNR capacity approximation and mutual-information variance.

    c ~ m ln(SNR) - gamma m + sum_j sum_{p<=l-j} 1/p; the variance term is
    the trigamma tail sum_j psi'(l-j+1), exact for the approximation.
    """
    if not snr > 0.0:
        raise DomainError("snr must be positive")
    m, l = min(cfg.t, cfg.r), max(cfg.t, cfg.r)
    c = m * math.log(snr) - EULER_GAMMA * m
    c += sum(_harmonic(1, l - j) for j in range(1, m + 1))
    v_i = sum(trigamma(l - j + 1) for j in range(1, m + 1))
    return c, v_i


def mimo_achievable_nld(cfg: MimoConfig, n: int, eps: float) -> FiniteBlocklengthPoint:
    """First-order achievable NLD for an n*t complex-dimensional constellation."""
    if n < 1:
        raise DomainError("block length must be >= 1")
    if not (0.0 < eps < 1.0):
        raise DomainError("eps must be in (0,1)")
    delta = mimo_capacity_fdt(cfg)
    v = mimo_dispersion_fdt(cfg)
    nld = delta - math.sqrt(v / n) * q_inverse(eps)
    return FiniteBlocklengthPoint(n=n, eps=eps, nld=nld)
