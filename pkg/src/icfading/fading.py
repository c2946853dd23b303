"""Marginal fading laws and temporal fading processes.

All models are normalized to E{H^2} = 1 (the Nakagami family satisfies this
by construction; tabulated densities are rescaled when built). The moments of
(1/2) ln H^2 computed here feed every dispersion formula downstream.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import signal as _sp_signal

from .errors import DomainError, MomentDivergenceError, NonConvergenceError
from .numerics import (
    EULER_GAMMA,
    QuadratureSpec,
    digamma,
    integrate,
    trigamma,
)
from .sampling import McConfig, McEstimate, batch_generators, batch_sizes

__all__ = [
    "FadingModel",
    "Awgn",
    "Nakagami",
    "TabulatedPdf",
    "rayleigh",
    "LogFadingMoments",
    "RegularityReport",
    "FadingProcess",
    "Iid",
    "GaussAr1",
    "GaussArma",
    "TruncationRule",
    "log_moments",
    "sample_h",
    "regularity_exponent",
    "log_autocovariance",
    "dispersion_sum",
]

_DEFAULT_SPEC = QuadratureSpec(abs_tol=1e-11, rel_tol=1e-11)


@dataclass(frozen=True)
class LogFadingMoments:
    """First three moments of (1/2) ln H^2 in nats."""

    mean_half_log_sq: float
    var_half_log_sq: float
    abs_third_central: float
    all_finite: bool = True


@dataclass(frozen=True)
class RegularityReport:
    """Low-amplitude density exponent: f(h) ~ h^(alpha-1) near zero.

    alpha is None when no finite exponent was established; for an
    indeterminate fit (grid not reaching small h) is_regular is False and
    alpha is None as well.
    """

    alpha: Optional[float]
    is_regular: bool


class FadingModel:
    """Base marginal fading law with unit second moment."""

    def log_moments(self, spec: QuadratureSpec = _DEFAULT_SPEC) -> LogFadingMoments:
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        raise NotImplementedError

    def regularity(self) -> RegularityReport:
        raise NotImplementedError

    def neg_moment_finite(self, order: float) -> bool:
        """Whether E{H^(-order)} is finite (used by the exponent module)."""
        raise NotImplementedError

    def params(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Awgn(FadingModel):
    """Degenerate fading H = 1 (pure additive white Gaussian noise channel)."""

    def log_moments(self, spec: QuadratureSpec = _DEFAULT_SPEC) -> LogFadingMoments:
        return LogFadingMoments(0.0, 0.0, 0.0, True)

    def sample(self, rng, size):
        return np.ones(size)

    def regularity(self):
        # no probability mass near zero: regular by convention
        return RegularityReport(alpha=None, is_regular=True)

    def neg_moment_finite(self, order):
        return True

    def params(self):
        return {"fading": "awgn"}


@dataclass(frozen=True)
class Nakagami(FadingModel):
    """Nakagami-m amplitude law f(h) = (2 m^m / Gamma(m)) h^(2m-1) e^(-m h^2).

    H^2 ~ Gamma(m, 1/m), so E{H^2} = 1 exactly for every shape m >= 1/2.
    m = 1 is Rayleigh.
    """

    m: float

    def __post_init__(self):
        if not self.m >= 0.5:
            raise DomainError(f"Nakagami shape must satisfy m >= 0.5, got {self.m}")

    def pdf(self, h):
        h = np.asarray(h, dtype=np.float64)
        log_norm = math.log(2.0) + self.m * math.log(self.m) - _ln_gamma(self.m)
        with np.errstate(divide="ignore"):
            out = np.exp(log_norm + (2.0 * self.m - 1.0) * np.log(h) - self.m * h * h)
        return np.where(h > 0, out, 0.0)

    def log_moments(self, spec: QuadratureSpec = _DEFAULT_SPEC) -> LogFadingMoments:
        mean = 0.5 * (digamma(self.m) - math.log(self.m))
        var = 0.25 * trigamma(self.m)
        third = 0.125 * _gamma_log_abs_third(self.m, spec)
        return LogFadingMoments(mean, var, third, True)

    def sample(self, rng, size):
        return np.sqrt(rng.gamma(shape=self.m, scale=1.0 / self.m, size=size))

    def regularity(self):
        return RegularityReport(alpha=2.0 * self.m, is_regular=True)

    def neg_moment_finite(self, order):
        # E{H^-a} = m^{a/2} Gamma(m - a/2)/Gamma(m), finite iff a < 2m
        return order < 2.0 * self.m

    def params(self):
        return {"fading": "nakagami", "m": self.m}


def rayleigh() -> Nakagami:
    """The canonical fading case: Rayleigh amplitude, i.e. Nakagami(1)."""
    return Nakagami(1.0)


class TabulatedPdf(FadingModel):
    """Fading law given as (h, density) samples, linearly interpolated.

    The grid must be strictly increasing with h > 0. At construction the
    density is normalized to unit mass and the amplitude axis rescaled so
    that E{H^2} = 1.
    """

    def __init__(self, h: Sequence[float], density: Sequence[float]):
        h = np.asarray(h, dtype=np.float64)
        f = np.asarray(density, dtype=np.float64)
        if h.ndim != 1 or h.shape != f.shape or h.size < 2:
            raise DomainError("tabulated grid needs matching 1-D arrays of length >= 2")
        if not np.all(np.diff(h) > 0):
            raise DomainError("tabulated grid must be strictly increasing in h")
        if not np.all(h > 0):
            raise DomainError("tabulated grid requires h > 0")
        if np.any(f < 0) or not np.all(np.isfinite(f)):
            raise DomainError("tabulated density must be finite and nonnegative")
        mass = np.trapezoid(f, h)
        if mass <= 0:
            raise DomainError("tabulated density has no mass")
        f = f / mass
        scale = math.sqrt(self._moment(h, f, lambda t: t * t))
        self.h = h / scale
        self.f = f * scale
        self._cum = np.concatenate(([0.0], np.cumsum(
            0.5 * (self.f[1:] + self.f[:-1]) * np.diff(self.h))))
        self._cum /= self._cum[-1]

    @staticmethod
    def _moment(h, f, g):
        """Integral of g(h) f(h) dh for the piecewise-linear density.

        Per-segment 16-point Gauss-Legendre; exact for the polynomial parts
        and plenty for the smooth log factors used here.
        """
        nodes, weights = np.polynomial.legendre.leggauss(16)
        a, b = h[:-1], h[1:]
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        pts = mid[:, None] + half[:, None] * nodes[None, :]
        fa, fb = f[:-1], f[1:]
        t = (pts - a[:, None]) / (b - a)[:, None]
        dens = fa[:, None] * (1 - t) + fb[:, None] * t
        return float(np.sum(weights[None, :] * g(pts) * dens * half[:, None]))

    def pdf(self, h):
        return np.interp(np.asarray(h, dtype=np.float64), self.h, self.f,
                         left=0.0, right=0.0)

    def log_moments(self, spec: QuadratureSpec = _DEFAULT_SPEC) -> LogFadingMoments:
        rep = self.regularity()
        if rep.alpha is not None and rep.alpha <= 1e-9 and self.h[0] < 1e-2:
            raise MomentDivergenceError(
                "tabulated density behaves like h^(alpha-1) with alpha <= 0 near zero; "
                "E{ln^2 H} diverges",
                moment="E{ln^2 H}",
            )
        mean = self._moment(self.h, self.f, np.log)
        var = self._moment(self.h, self.f, lambda t: (np.log(t) - mean) ** 2)
        third = self._moment(self.h, self.f, lambda t: np.abs(np.log(t) - mean) ** 3)
        return LogFadingMoments(mean, var, third, True)

    def sample(self, rng, size):
        u = rng.random(size)
        seg = np.clip(np.searchsorted(self._cum, u, side="right") - 1, 0, self.h.size - 2)
        a, b = self.h[seg], self.h[seg + 1]
        fa, fb = self.f[seg], self.f[seg + 1]
        rem = (u - self._cum[seg]) * 1.0
        width = b - a
        # within-segment mass: fa*w*t + (fb-fa)*w*t^2/2 = rem, t in [0,1]
        c2 = 0.5 * (fb - fa) * width
        c1 = fa * width
        disc = np.maximum(c1 * c1 + 4.0 * c2 * rem, 0.0)
        linear = np.abs(c2) < 1e-300
        denom = np.where(linear, 1.0, 2.0 * c2)
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (-c1 + np.sqrt(disc)) / denom
        t = np.where(linear, rem / np.where(c1 > 0, c1, 1.0), t)
        return a + np.clip(t, 0.0, 1.0) * width

    def regularity(self):
        if self.h[0] > 0.1:
            return RegularityReport(alpha=None, is_regular=False)
        # lowest grid decade; widened to >= 9 points for linearly spaced grids
        window = max(10.0 * self.h[0], self.h[min(8, self.h.size - 1)])
        lo_mask = self.h <= min(window, self.h[-1])
        hh, ff = self.h[lo_mask], self.f[lo_mask]
        keep = ff > 0
        if keep.sum() < 2:
            return RegularityReport(alpha=None, is_regular=False)
        slope = np.polyfit(np.log(hh[keep]), np.log(ff[keep]), 1)[0]
        alpha = float(slope + 1.0)
        return RegularityReport(alpha=alpha, is_regular=alpha > 1e-9)

    def neg_moment_finite(self, order):
        rep = self.regularity()
        if rep.alpha is None:
            return rep.is_regular
        return order < rep.alpha

    def params(self):
        return {"fading": "tabulated", "points": int(self.h.size)}


def _ln_gamma(x):
    from .numerics import ln_gamma

    return ln_gamma(x)


@functools.lru_cache(maxsize=256)
def _gamma_log_abs_third(m: float, spec: QuadratureSpec) -> float:
    """E{|ln G - psi(m)|^3} for G ~ Gamma(m, 1), split at the interior kink."""
    mu = digamma(m)
    g0 = math.exp(mu)

    def integrand(g):
        if g <= 0.0:
            return 0.0
        return abs(math.log(g) - mu) ** 3 * math.exp(
            (m - 1.0) * math.log(g) - g - _ln_gamma(m)
        )

    left = integrate(integrand, spec, (0.0, g0))
    right = integrate(integrand, spec, (g0, math.inf))
    return left + right


# ---------------------------------------------------------------------------
# temporal processes
# ---------------------------------------------------------------------------


class FadingProcess:
    """Stationary fading process; exposes the marginal law and log-fading
    autocorrelation structure needed by the memory dispersion formula."""

    def marginal(self) -> FadingModel:
        raise NotImplementedError

    def is_iid(self) -> bool:
        return False

    def correlation(self, k: int) -> float:
        """Correlation of the underlying Gaussian process at lag k (Gauss variants)."""
        raise NotImplementedError


@dataclass(frozen=True)
class Iid(FadingProcess):
    """Independent fading draws from any marginal model (fast fading)."""

    model: FadingModel

    def marginal(self):
        return self.model

    def is_iid(self):
        return True

    def correlation(self, k):
        return 0.0 if k else 1.0


class _GaussProcess(FadingProcess):
    """Unit-variance circular complex Gaussian process; H = |G|.

    The amplitude marginal is Rayleigh (Nakagami(1)), so E{H^2} = 1 and
    Var((1/2) ln H^2) = pi^2/24 at lag zero.
    """

    def marginal(self):
        return Nakagami(1.0)


@dataclass(frozen=True)
class GaussAr1(_GaussProcess):
    """First-order autoregressive Gaussian fading, G_i = a G_{i-1} + W_i."""

    a: float

    def __post_init__(self):
        if not abs(self.a) < 1.0:
            raise DomainError(f"AR(1) coefficient must satisfy |a| < 1, got {self.a}")

    def is_iid(self):
        return self.a == 0.0

    def correlation(self, k):
        return float(self.a ** k)


class GaussArma(_GaussProcess):
    """Finite-order ARMA Gaussian fading.

    ar = (a_1..a_p) with G_i = sum_k a_k G_{i-k} + MA part; ma = (b_1..b_q)
    applied to the white innovations. All AR characteristic roots must lie
    strictly inside the unit circle.
    """

    _IMPULSE_LEN = 4096

    def __init__(self, ar: Sequence[float] = (), ma: Sequence[float] = ()):
        self.ar = tuple(float(c) for c in ar)
        self.ma = tuple(float(c) for c in ma)
        if self.ar:
            roots = np.roots(np.concatenate(([1.0], -np.asarray(self.ar))))
            if np.any(np.abs(roots) >= 1.0):
                raise DomainError("ARMA autoregressive part is not a stable filter")
        impulse = np.zeros(self._IMPULSE_LEN)
        impulse[0] = 1.0
        psi = _sp_signal.lfilter(
            np.concatenate(([1.0], np.asarray(self.ma, dtype=np.float64))),
            np.concatenate(([1.0], -np.asarray(self.ar, dtype=np.float64))),
            impulse,
        )
        energy = float(np.dot(psi, psi))
        self._psi = psi
        self._energy = energy

    def is_iid(self):
        return not self.ar and not self.ma

    def correlation(self, k):
        if k >= self._IMPULSE_LEN:
            return 0.0
        return float(np.dot(self._psi[: self._IMPULSE_LEN - k],
                            self._psi[k:]) / self._energy)


@dataclass(frozen=True)
class TruncationRule:
    """Stop the lag sum when |R(k)| stays below stop_fraction * R(0)."""

    stop_fraction: float = 1e-3
    max_lag: int = 200
    consecutive: int = 3


# ---------------------------------------------------------------------------
# operations (thin functional surface over the model methods)
# ---------------------------------------------------------------------------


def log_moments(model: FadingModel, spec: QuadratureSpec = _DEFAULT_SPEC) -> LogFadingMoments:
    return model.log_moments(spec)


def sample_h(model: FadingModel, rng: np.random.Generator, size: int = 1) -> np.ndarray:
    return model.sample(rng, size)


def regularity_exponent(model: FadingModel) -> RegularityReport:
    return model.regularity()


def log_autocovariance(process: FadingProcess, k: int, mc: McConfig) -> McEstimate:
    """Cov((1/2) ln H_1^2, (1/2) ln H_{1+k}^2) of the stationary process.

    Independent lags are answered analytically; Gaussian processes sample
    correlated pairs with the exact lag-k correlation (unbiased per-lag
    estimates with independent confidence intervals). The known marginal
    mean -gamma/2 is used, making the per-sample products i.i.d.
    """
    if k < 0:
        raise DomainError("lag must be >= 0")
    if k == 0:
        return McEstimate.exact(process.marginal().log_moments().var_half_log_sq, lag=0)
    if process.is_iid():
        return McEstimate.exact(0.0, lag=k)
    rho = process.correlation(k)
    if rho == 0.0:
        return McEstimate.exact(0.0, lag=k)
    mu = -0.5 * EULER_GAMMA  # E{(1/2) ln |G|^2} for unit circular Gaussian G
    sizes = batch_sizes(mc)
    gens = batch_generators(mc, stream_tag=(int(k),))
    means = np.empty(mc.batches)
    varis = np.empty(mc.batches)
    c = math.sqrt(max(1.0 - rho * rho, 0.0))
    for b, (rng, nb) in enumerate(zip(gens, sizes)):
        g1 = rng.standard_normal(nb) + 1j * rng.standard_normal(nb)
        gi = rng.standard_normal(nb) + 1j * rng.standard_normal(nb)
        g2 = rho * g1 + c * gi
        x1 = 0.5 * np.log(0.5 * (g1.real ** 2 + g1.imag ** 2))
        x2 = 0.5 * np.log(0.5 * (g2.real ** 2 + g2.imag ** 2))
        prod = (x1 - mu) * (x2 - mu)
        means[b] = prod.mean()
        varis[b] = prod.var()
    from .sampling import pooled_estimate

    return pooled_estimate(means, varis, sizes, mc.z_value, lag=k, correlation=rho)


def dispersion_sum(
    process: FadingProcess,
    mc: McConfig,
    truncation: TruncationRule = TruncationRule(),
) -> McEstimate:
    """1/2 + R(0) + 2 sum_k R(k), truncated once the lag terms are negligible.

    A lag counts as negligible when |R(k)| drops below stop_fraction * R(0),
    or when its estimate is statistically indistinguishable from zero (two
    standard errors): below the Monte Carlo noise floor the sum would only
    accumulate variance. Returns the dispersion with the uncertainty
    propagated across lags; raises NonConvergenceError (carrying the partial
    sum) if the rule is not met by max_lag.
    """
    r0 = log_autocovariance(process, 0, mc)
    total = 0.5 + r0.mean
    var_total = r0.std_err ** 2
    lags_used = 0
    if not process.is_iid():
        threshold = truncation.stop_fraction * abs(r0.mean)
        quiet = 0
        k = 0
        while quiet < truncation.consecutive:
            k += 1
            if k > truncation.max_lag:
                partial = McEstimate.from_moments(total, 0.0, mc.samples, mc.z_value)
                raise NonConvergenceError(
                    f"autocovariance truncation not reached by lag {truncation.max_lag}",
                    partial=partial,
                )
            rk = log_autocovariance(process, k, mc)
            total += 2.0 * rk.mean
            var_total += 4.0 * rk.std_err ** 2
            lags_used = k
            negligible = abs(rk.mean) < max(threshold, 2.0 * rk.std_err)
            quiet = quiet + 1 if negligible else 0
    se = math.sqrt(var_total)
    return McEstimate(mean=total, std_err=se, n_effective=mc.samples,
                      ci_half_width=mc.z_value * se, extras={"lags": lags_used})
