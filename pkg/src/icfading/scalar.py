"""Closed-form capacity/dispersion analysis for scalar channels.

Unit convention: real_scalar quantities are per real dimension and
complex_scalar quantities per complex dimension (= per channel use); the
factor of 2 between the two shows up once, in capacity_dispersion_complex.
dB conversions use 2*10*log10(e) = 8.6859 dB/nat for real NLD gaps and
10*log10(e) = 4.3429 dB/nat per complex dimension.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

from .errors import DomainError, MomentDivergenceError
from .fading import FadingModel, FadingProcess, Nakagami, TabulatedPdf, Awgn, log_moments, dispersion_sum
from .numerics import QuadratureSpec, integrate, q_inverse
from .sampling import McConfig, McEstimate

__all__ = [
    "DispersionResult",
    "FiniteBlocklengthPoint",
    "VnrResult",
    "DB_PER_NAT_REAL",
    "DB_PER_NAT_COMPLEX",
    "capacity_dispersion_real",
    "capacity_dispersion_complex",
    "achievable_nld",
    "vnr_optimal",
    "awgn_gap",
    "power_constrained_dispersion",
    "memory_dispersion",
]

DB_PER_NAT_REAL = 20.0 / math.log(10.0)      # 8.6859: real, per-dimension gaps
DB_PER_NAT_COMPLEX = 10.0 / math.log(10.0)   # 4.3429: per complex dimension

Domain = Literal["real_scalar", "complex_scalar", "mimo_fdt", "parallel"]


@dataclass(frozen=True)
class DispersionResult:
    """Capacity (delta_star, nats per dimension) and dispersion (v, nats^2).

    sigma2 is the noise variance the capacity was evaluated at: per real
    dimension for real_scalar, total complex-noise variance otherwise.
    """

    delta_star: float
    v: float
    domain: Domain
    sigma2: float

    def __post_init__(self):
        floor = {"real_scalar": 0.5, "complex_scalar": 1.0}.get(self.domain)
        if floor is not None and self.v < floor - 1e-12:
            raise DomainError(
                f"dispersion {self.v} below the AWGN floor {floor} for {self.domain}"
            )


@dataclass(frozen=True)
class FiniteBlocklengthPoint:
    """First-order achievable NLD at block length n and error target eps.

    The O(ln n / n) remainder of the expansion is dropped; remainder_dropped
    records that the reported value is first-order only.
    """

    n: int
    eps: float
    nld: float
    remainder_dropped: bool = True


@dataclass(frozen=True)
class VnrResult:
    """Optimal volume-to-noise ratio: first-order form and the exact exponential."""

    first_order: float
    exact: float
    n: int
    eps: float


def _require_finite(moments):
    if not moments.all_finite:
        raise MomentDivergenceError("fading log-moments diverge", moment="Var{ln H}")
    return moments


def capacity_dispersion_real(model: FadingModel, sigma2: float) -> DispersionResult:
    """Poltyrev capacity and dispersion of the real scalar channel.

    delta_star = E{(1/2) ln(H^2/(2 pi e sigma^2))}, v = 1/2 + Var((1/2) ln H^2).
    """
    if not sigma2 > 0.0:
        raise DomainError("sigma2 must be positive")
    mom = _require_finite(log_moments(model))
    delta = mom.mean_half_log_sq + 0.5 * math.log(1.0 / (2.0 * math.pi * math.e * sigma2))
    return DispersionResult(delta, 0.5 + mom.var_half_log_sq, "real_scalar", sigma2)


def capacity_dispersion_complex(model: FadingModel, sigma2: float) -> DispersionResult:
    """Complex scalar channel, per channel use; model describes |H|.

    delta_star = E{ln(|H|^2/(pi e sigma^2))}, v = 1 + Var(ln |H|^2).
    """
    if not sigma2 > 0.0:
        raise DomainError("sigma2 must be positive")
    mom = _require_finite(log_moments(model))
    delta = 2.0 * mom.mean_half_log_sq + math.log(1.0 / (math.pi * math.e * sigma2))
    return DispersionResult(delta, 1.0 + 4.0 * mom.var_half_log_sq, "complex_scalar", sigma2)


def achievable_nld(dr: DispersionResult, n: int, eps: float) -> FiniteBlocklengthPoint:
    """delta_star - sqrt(v/n) Q^{-1}(eps), the first-order finite-n backoff."""
    if n < 1:
        raise DomainError("block length must be >= 1")
    if not (0.0 < eps < 1.0):
        raise DomainError("eps must be in (0,1)")
    nld = dr.delta_star - math.sqrt(dr.v / n) * q_inverse(eps)
    return FiniteBlocklengthPoint(n=n, eps=eps, nld=nld)


def vnr_optimal(model: FadingModel, n: int, eps: float) -> VnrResult:
    """Optimal VNR: 1 + sqrt((2 + Var(ln H^2))/n) Q^{-1}(eps) to first order.

    The exact form exp(2 (delta_star - delta_star(n, eps))) is returned
    alongside; it always dominates the first-order value (e^x >= 1 + x).
    """
    if n < 1:
        raise DomainError("block length must be >= 1")
    if not (0.0 < eps < 1.0):
        raise DomainError("eps must be in (0,1)")
    mom = _require_finite(log_moments(model))
    backoff = math.sqrt((2.0 + 4.0 * mom.var_half_log_sq) / n) * q_inverse(eps)
    first_order = 1.0 + backoff
    exact = math.exp(backoff)
    assert exact >= first_order - 1e-12
    return VnrResult(first_order=first_order, exact=exact, n=n, eps=eps)


def awgn_gap(model: FadingModel) -> tuple[float, float]:
    """Capacity loss against unconstrained AWGN: (-E{ln H} nats, its dB value)."""
    mom = _require_finite(log_moments(model))
    nats = -mom.mean_half_log_sq
    return nats, DB_PER_NAT_REAL * nats


def _fading_expectation(model: FadingModel, g, spec: QuadratureSpec) -> float:
    """E{g(H)} by quadrature against the model's amplitude density."""
    if isinstance(model, Awgn):
        return g(1.0)
    if isinstance(model, Nakagami):
        m = model.m
        from .numerics import ln_gamma

        def integrand(h):
            if h <= 0.0:
                return 0.0
            log_pdf = (
                math.log(2.0) + m * math.log(m) - ln_gamma(m)
                + (2.0 * m - 1.0) * math.log(h) - m * h * h
            )
            return g(h) * math.exp(log_pdf)

        return integrate(integrand, spec, (0.0, math.inf))
    if isinstance(model, TabulatedPdf):
        import numpy as np

        return model._moment(model.h, model.f, lambda t: np.vectorize(g)(t))
    raise DomainError(f"unsupported fading model {type(model).__name__}")


def power_constrained_dispersion(
    model: FadingModel, snr: float, spec: QuadratureSpec = QuadratureSpec(abs_tol=1e-10, rel_tol=1e-10)
) -> float:
    """Dispersion of the power-constrained channel at finite SNR.

    V = Var((1/2) ln(1 + SNR H^2)) + (1/2)(1 - E^2{1/(1 + SNR H^2)});
    converges to the unconstrained value 1/2 + Var((1/2) ln H^2) as SNR grows.
    The variance is computed by a second centered pass to avoid cancellation
    at large SNR.
    """
    if not snr > 0.0:
        raise DomainError("snr must be positive")
    mean_c = _fading_expectation(model, lambda h: 0.5 * math.log1p(snr * h * h), spec)
    var_c = _fading_expectation(
        model, lambda h: (0.5 * math.log1p(snr * h * h) - mean_c) ** 2, spec
    )
    mean_inv = _fading_expectation(model, lambda h: 1.0 / (1.0 + snr * h * h), spec)
    return var_c + 0.5 * (1.0 - mean_inv * mean_inv)


def memory_dispersion(
    process: FadingProcess, sigma2: float, mc: McConfig
) -> tuple[DispersionResult, McEstimate]:
    """Capacity and dispersion of a stationary fading process.

    The capacity only sees the marginal law; memory enters the dispersion
    through the lag sum 1/2 + R(0) + 2 sum R(k). Returns the result with the
    Monte Carlo dispersion estimate (its CI quantifies the lag-sum noise).
    """
    if not sigma2 > 0.0:
        raise DomainError("sigma2 must be positive")
    marginal = capacity_dispersion_real(process.marginal(), sigma2)
    v_est = dispersion_sum(process, mc)
    result = DispersionResult(marginal.delta_star, max(v_est.mean, 0.5),
                              "real_scalar", sigma2)
    return result, v_est
