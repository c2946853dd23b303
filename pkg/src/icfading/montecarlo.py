"""Seeded Monte Carlo estimators for the probability bounds.

All estimators follow the same stream discipline (see sampling module): one
Philox substream per batch, deterministic batch order, chunked generation so
memory stays bounded. Probability estimates are clamped to [0,1] with the
raw mean kept in extras.

The MIMO determinant sampling uses the chi-square product construction
(ln det(H^H H) equal in law to a sum of log-Gamma draws); det_log_verify
checks that construction against direct matrix sampling, keeping the two
routes independent.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import stats as _sp_stats

from ._kernels import BACKEND, scalar_info_density
from .errors import AccuracyError, AccuracyWarning, DomainError
from .fading import Awgn, FadingModel, regularity_exponent
from .mimo import MimoConfig, mimo_capacity_fdt, mimo_dispersion_fdt
from .numerics import (
    QuadratureSpec,
    integrate,
    ln_ball_volume,
    ln_gamma,
    maximize_unimodal,
    q_inverse,
    regularized_gamma_upper,
)
from .sampling import McConfig, McEstimate, batch_generators, batch_sizes, map_batches

__all__ = [
    "McConfig",
    "McEstimate",
    "BACKEND",
    "sphere_packing_bound",
    "sphere_packing_converse_nld",
    "dt_bound",
    "dt_bound_from_info_density",
    "dt_achievable_nld",
    "DtNldResult",
    "info_density_moments",
    "InfoDensityMoments",
    "lattice_typicality_bound",
    "det_log_verify",
    "DetLogVerifyResult",
    "log_chi2_tv_error",
    "log_chi2_pdf",
]

_CHUNK = 1 << 21  # max scalar draws per generation chunk

SpDomain = Union[FadingModel, MimoConfig]


def _chunk_sizes(total: int, max_chunk: int = _CHUNK) -> list[int]:
    out = []
    while total > 0:
        take = min(total, max_chunk)
        out.append(take)
        total -= take
    return out


# ---------------------------------------------------------------------------
# sphere packing bound
# ---------------------------------------------------------------------------


def _sp_break_even(target: SpDomain, n: int, sigma2: float,
                   rng: np.random.Generator, size: int, complex_domain: bool) -> np.ndarray:
    """Per-sample break-even NLDs D: the bound indicator is {D <= delta}.

    Real scalar:   D = (1/n)(sum ln h - ln V_n) - (1/2) ln(sigma^2 C_n)
    Complex scalar:D = (1/n)(2 sum ln h - ln V_2n) - ln(sigma^2 C_2n / 2)
    MIMO (t x r):  D = t [ (1/(nt))(sum ln det - ln V_2nt) - ln(sigma^2 C_2nt / 2) ]
    with C_k a chi-square(k) draw (Gamma transform) matched to the noise norm.
    """
    if isinstance(target, MimoConfig):
        t, r = target.t, target.r
        log_dets = np.zeros(size)
        for j in range(1, t + 1):
            g = rng.gamma(shape=float(r - j + 1), scale=1.0, size=(size, n))
            log_dets += np.log(g).sum(axis=1)
        chi = 2.0 * rng.gamma(shape=n * t, scale=1.0, size=size)  # chi^2_{2nt}
        core = (log_dets - ln_ball_volume(2 * n * t)) / (n * t)
        return t * (core - np.log(sigma2 * chi / 2.0))
    model = target
    degenerate = isinstance(model, Awgn)  # ln h == 0, skip the fading draws
    if complex_domain:
        if degenerate:
            log_h_sum = 0.0
        else:
            h = model.sample(rng, size * n).reshape(size, n)
            log_h_sum = np.log(h).sum(axis=1)
        chi = 2.0 * rng.gamma(shape=float(n), scale=1.0, size=size)  # chi^2_{2n}
        core = (2.0 * log_h_sum - ln_ball_volume(2 * n)) / n
        return core - np.log(sigma2 * chi / 2.0)
    if degenerate:
        log_h_sum = 0.0
    else:
        h = model.sample(rng, size * n).reshape(size, n)
        log_h_sum = np.log(h).sum(axis=1)
    chi = 2.0 * rng.gamma(shape=0.5 * n, scale=1.0, size=size)  # chi^2_n
    return (log_h_sum - ln_ball_volume(n)) / n - 0.5 * np.log(sigma2 * chi)


def _sp_samples(target: SpDomain, n: int, sigma2: float, mc: McConfig,
                complex_domain: bool) -> np.ndarray:
    sizes = batch_sizes(mc)
    gens = batch_generators(mc, stream_tag=(1,))

    def one(rng, nb):
        return np.concatenate([
            _sp_break_even(target, n, sigma2, rng, chunk, complex_domain)
            for chunk in _chunk_sizes(nb, max(_CHUNK // max(n, 1), 1))
        ])

    return np.concatenate(map_batches(one, gens, sizes))


def sphere_packing_bound(
    target: SpDomain,
    n: int,
    delta: float,
    sigma2: float,
    mc: McConfig,
    complex_domain: bool = False,
) -> McEstimate:
    """Monte Carlo sphere-packing lower bound on the error probability.

    target selects the channel: a FadingModel for the scalar real channel
    (or scalar complex with complex_domain=True, delta per complex
    dimension), or a MimoConfig. The sigma2 argument governs the noise in
    every case (a MimoConfig's own sigma2 is not consulted here). For the
    degenerate AWGN channel the analytic chi-square tail is attached in
    extras and cross-checked against the Monte Carlo value within four
    standard errors.
    """
    if n < 1:
        raise DomainError("block length must be >= 1")
    if not sigma2 > 0.0:
        raise DomainError("sigma2 must be positive")
    d = _sp_samples(target, n, sigma2, mc, complex_domain)
    hits = (d <= delta)
    raw = float(hits.mean())
    var = raw * (1.0 - raw)
    est = McEstimate.from_moments(min(max(raw, 0.0), 1.0), var, d.size, mc.z_value,
                                  raw_mean=raw, delta=delta, blocklength=n)
    if isinstance(target, Awgn) and not complex_domain:
        threshold = math.exp(-2.0 * delta - 2.0 * ln_ball_volume(n) / n)
        analytic = regularized_gamma_upper(0.5 * n, threshold / (2.0 * sigma2))
        est.extras["analytic"] = analytic
        # binomial-exact band when the hit count is too small for a normal CI
        band = 4.0 * max(est.std_err, math.sqrt(analytic / d.size))
        if abs(raw - analytic) > band:
            raise AccuracyError(
                f"AWGN sphere-packing MC {raw:.4g} disagrees with the analytic tail "
                f"{analytic:.4g} beyond 4 standard errors",
                best_estimate=analytic,
            )
    return est


def sphere_packing_converse_nld(
    target: SpDomain,
    n: int,
    eps: float,
    sigma2: float,
    mc: McConfig,
    complex_domain: bool = False,
    tol: float = 1e-4,
) -> McEstimate:
    """NLD at which the sphere-packing bound equals eps (converse point).

    Inverts the bound over delta by bisection on a common-random-numbers
    sample set (the bound is nondecreasing in delta), to tol nats.
    """
    if not (0.0 < eps < 1.0):
        raise DomainError("eps must be in (0,1)")
    d = np.sort(_sp_samples(target, n, sigma2, mc, complex_domain))
    lo, hi = float(d[0]) - 1.0, float(d[-1]) + 1.0

    def level(delta: float) -> float:
        return np.searchsorted(d, delta, side="right") / d.size

    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if level(mid) >= eps:
            hi = mid
        else:
            lo = mid
    delta = 0.5 * (lo + hi)
    se = math.sqrt(eps * (1.0 - eps) / d.size)
    return McEstimate(mean=delta, std_err=se, n_effective=int(d.size),
                      ci_half_width=mc.z_value * se,
                      extras={"eps": eps, "blocklength": n, "achieved": level(delta)})


# ---------------------------------------------------------------------------
# dependence-testing bound
# ---------------------------------------------------------------------------


def dt_bound_from_info_density(i: np.ndarray, M: int) -> np.ndarray:
    """exp(-[i - ln((M-1)/2)]^+): the per-sample DT bound values."""
    if M < 2:
        raise DomainError("need at least two codewords")
    ln_gamma_thr = math.log((M - 1) / 2.0)
    return np.exp(-np.maximum(np.asarray(i) - ln_gamma_thr, 0.0))


def _draw_info_density(model: FadingModel, n: int, a: float, sigma: float,
                       rng: np.random.Generator, size: int) -> tuple[np.ndarray, int]:
    """Per-sample total information densities over n symbols; (i, guarded)."""
    x = rng.uniform(-0.5 * a, 0.5 * a, size * n)
    h = model.sample(rng, size * n)
    z = rng.normal(0.0, sigma, size * n)
    i_sym, guarded = scalar_info_density(x, h, z, a, sigma)
    return i_sym.reshape(size, n).sum(axis=1), guarded


def _guard_check(guarded: int, samples: int):
    if guarded > 1e-3 * samples:
        warnings.warn(
            f"{guarded} guarded density evaluations over {samples} samples "
            "(log-tail branch past double-precision underflow); estimates keep "
            "full log-domain accuracy but the cube may be too small",
            AccuracyWarning,
        )


def dt_bound(
    model: FadingModel, n: int, cube_a: float, M: int, sigma2: float, mc: McConfig
) -> McEstimate:
    """Dependence-testing upper bound on the error probability.

    Codewords uniform in a side-a cube; the per-symbol output density given
    the fading uses the exact Q-difference form evaluated in log space.
    """
    if M < 2:
        raise DomainError("need at least two codewords")
    if n < 1:
        raise DomainError("block length must be >= 1")
    if not (cube_a > 0.0 and sigma2 > 0.0):
        raise DomainError("cube side and sigma2 must be positive")
    sigma = math.sqrt(sigma2)
    sizes = batch_sizes(mc)
    gens = batch_generators(mc, stream_tag=(2,))

    def one(rng, nb):
        s = sq = 0.0
        g_total = 0
        for chunk in _chunk_sizes(nb, max(_CHUNK // n, 1)):
            i, g = _draw_info_density(model, n, cube_a, sigma, rng, chunk)
            vals = dt_bound_from_info_density(i, M)
            s += vals.sum()
            sq += (vals ** 2).sum()
            g_total += g
        return s, sq, g_total

    parts = map_batches(one, gens, sizes)
    total = sum(p[0] for p in parts)
    total_sq = sum(p[1] for p in parts)
    guarded = sum(p[2] for p in parts)
    _guard_check(guarded, mc.samples)
    raw = total / mc.samples
    var = max(total_sq / mc.samples - raw * raw, 0.0)
    return McEstimate.from_moments(min(max(raw, 0.0), 1.0), var, mc.samples, mc.z_value,
                                   raw_mean=raw, guarded=guarded, cube_a=cube_a, M=M)


@dataclass(frozen=True)
class InfoDensityMoments:
    """Monte Carlo moments of the per-symbol information density."""

    mean: McEstimate
    variance: McEstimate
    abs_third_central: McEstimate
    guarded: int


def info_density_moments(
    model: FadingModel, cube_a: float, sigma2: float, mc: McConfig
) -> InfoDensityMoments:
    """(I, Var(i), rho3) of the single-symbol information density.

    Standard errors come from the empirical fourth and sixth central moments
    of the same sample.
    """
    if not (cube_a > 0.0 and sigma2 > 0.0):
        raise DomainError("cube side and sigma2 must be positive")
    sigma = math.sqrt(sigma2)
    sizes = batch_sizes(mc)
    gens = batch_generators(mc, stream_tag=(3,))

    def one(rng, nb):
        arrs, g_total = [], 0
        for chunk in _chunk_sizes(nb):
            arr, g = _draw_info_density(model, 1, cube_a, sigma, rng, chunk)
            arrs.append(arr)
            g_total += g
        return np.concatenate(arrs), g_total

    parts = map_batches(one, gens, sizes)
    guarded = sum(p[1] for p in parts)
    _guard_check(guarded, mc.samples)
    i = np.concatenate([p[0] for p in parts])
    n = i.size
    z = mc.z_value
    mean = float(i.mean())
    dev = i - mean
    var = float(np.mean(dev ** 2))
    rho3 = float(np.mean(np.abs(dev) ** 3))
    m4 = float(np.mean(dev ** 4))
    m6 = float(np.mean(dev ** 6))
    return InfoDensityMoments(
        mean=McEstimate.from_moments(mean, var, n, z),
        variance=McEstimate.from_moments(var, max(m4 - var * var, 0.0), n, z),
        abs_third_central=McEstimate.from_moments(rho3, max(m6 - rho3 * rho3, 0.0), n, z),
        guarded=guarded,
    )


@dataclass(frozen=True)
class DtNldResult:
    """First-order achievable NLD from the dependence-testing bound.

    berry_esseen_budget is the normal-approximation constant
    B(a/sigma) = 6 rho3 / Var^{3/2}; offset_constant the companion
    2 ln 2 / sqrt(2 pi Var) term of the threshold analysis. Both are reported
    as metadata, never folded into the estimate.
    """

    nld: float
    n: int
    eps: float
    a_over_sigma: float
    mutual_information: McEstimate
    info_density_variance: McEstimate
    berry_esseen_budget: float
    offset_constant: float
    regularity_alpha: float | None


def dt_achievable_nld(
    model: FadingModel,
    n: int,
    eps: float,
    sigma2: float,
    mc: McConfig,
    a_over_sigma: float | None = None,
) -> DtNldResult:
    """I - ln a - sqrt(Var(i)/n) Q^{-1}(eps) with Monte Carlo moments.

    The default cube follows a(n) = sigma * n^(2 + 2/alpha) with alpha the
    fading regularity exponent (alpha -> inf, i.e. exponent 2, for the
    degenerate AWGN model).
    """
    if not (0.0 < eps < 1.0):
        raise DomainError("eps must be in (0,1)")
    sigma = math.sqrt(sigma2)
    rep = regularity_exponent(model)
    if a_over_sigma is None:
        exponent = 2.0 if rep.alpha is None else 2.0 + 2.0 / rep.alpha
        a_over_sigma = float(n) ** exponent
    mom = info_density_moments(model, a_over_sigma * sigma, sigma2, mc)
    var = mom.variance.mean
    rho3 = mom.abs_third_central.mean
    nld = mom.mean.mean - math.log(a_over_sigma * sigma) \
        - math.sqrt(var / n) * q_inverse(eps)
    return DtNldResult(
        nld=nld,
        n=n,
        eps=eps,
        a_over_sigma=a_over_sigma,
        mutual_information=mom.mean,
        info_density_variance=mom.variance,
        berry_esseen_budget=6.0 * rho3 / var ** 1.5,
        offset_constant=2.0 * math.log(2.0) / math.sqrt(2.0 * math.pi * var),
        regularity_alpha=rep.alpha,
    )


# ---------------------------------------------------------------------------
# typicality (lattice) bound
# ---------------------------------------------------------------------------


def lattice_typicality_bound(
    model: FadingModel,
    n: int,
    delta: float,
    sigma2: float,
    mc: McConfig,
    r_decode: float | None = None,
    eps: float | None = None,
) -> McEstimate:
    """Typicality-decoder bound: Pr{||z|| > r} + E{(r / r_eff(H))^n}.

    With a fixed r_decode the noise term is the analytic chi-square tail and
    the density term is averaged over the fading. With r_decode=None and eps
    given, the CSI-dependent tuned radius r^n = r_eff^n(H) eps/sqrt(n) is
    used: the density term becomes exactly eps/sqrt(n) and the noise term is
    averaged analytically over the fading draws.
    """
    if n < 1:
        raise DomainError("block length must be >= 1")
    if not sigma2 > 0.0:
        raise DomainError("sigma2 must be positive")
    ln_vn = ln_ball_volume(n)
    sizes = batch_sizes(mc)
    gens = batch_generators(mc, stream_tag=(4,))

    if r_decode is None:
        if eps is None:
            raise DomainError("either r_decode or eps must be given")
        # per-realization tuned radius: density term is eps/sqrt(n) exactly
        scale = math.log(eps) - 0.5 * math.log(n)
        total = 0.0
        total_sq = 0.0
        count = 0
        for rng, nb in zip(gens, sizes):
            for chunk in _chunk_sizes(nb, max(_CHUNK // n, 1)):
                h = model.sample(rng, chunk * n).reshape(chunk, n)
                ln_reff_sq = (2.0 / n) * (np.log(h).sum(axis=1) - n * delta - ln_vn)
                arg = np.exp(ln_reff_sq + (2.0 / n) * scale) / (2.0 * sigma2)
                vals = np.array([regularized_gamma_upper(0.5 * n, float(v)) for v in arg])
                total += vals.sum()
                total_sq += (vals ** 2).sum()
                count += chunk
        noise_mean = total / count
        var = max(total_sq / count - noise_mean ** 2, 0.0)
        density_term = eps / math.sqrt(n)
        raw = noise_mean + density_term
        est = McEstimate.from_moments(min(raw, 1.0), var, count, mc.z_value,
                                      raw_mean=raw, term_noise=noise_mean,
                                      term_density=density_term, tuned=True)
        return est

    if not r_decode > 0.0:
        raise DomainError("decoding radius must be positive")
    noise_term = regularized_gamma_upper(0.5 * n, r_decode ** 2 / (2.0 * sigma2))
    if isinstance(model, Awgn):
        density_term = math.exp(n * math.log(r_decode) + ln_vn + n * delta)
        raw = noise_term + density_term
        return McEstimate.from_moments(min(raw, 1.0), 0.0, mc.samples, mc.z_value,
                                       raw_mean=raw, term_noise=noise_term,
                                       term_density=density_term, tuned=False)
    log_base = n * math.log(r_decode) + ln_vn + n * delta
    total = 0.0
    total_sq = 0.0
    count = 0
    for rng, nb in zip(gens, sizes):
        for chunk in _chunk_sizes(nb, max(_CHUNK // n, 1)):
            h = model.sample(rng, chunk * n).reshape(chunk, n)
            vals = np.exp(log_base - np.log(h).sum(axis=1))
            total += vals.sum()
            total_sq += (vals ** 2).sum()
            count += chunk
    density_mean = total / count
    var = max(total_sq / count - density_mean ** 2, 0.0)
    raw = noise_term + density_mean
    return McEstimate.from_moments(min(raw, 1.0), var, count, mc.z_value,
                                   raw_mean=raw, term_noise=noise_term,
                                   term_density=density_mean, tuned=False)


# ---------------------------------------------------------------------------
# Wishart log-determinant verification
# ---------------------------------------------------------------------------


def _log_det_matrices(t: int, r: int, rng: np.random.Generator, size: int) -> np.ndarray:
    """ln det(H^H H) for size i.i.d. complex Gaussian r x t matrices."""
    shape = (size, r, t)
    h = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)
    if t == 1:
        return np.log((np.abs(h[:, :, 0]) ** 2).sum(axis=1))
    w = np.einsum("sri,srj->sij", h.conj(), h)
    if t == 2:
        det = w[:, 0, 0].real * w[:, 1, 1].real - np.abs(w[:, 0, 1]) ** 2
        return np.log(det)
    return np.linalg.slogdet(w)[1]


def _log_det_construction(t: int, r: int, rng: np.random.Generator, size: int) -> np.ndarray:
    """Sum of t independent log-Gamma(r-j+1) draws (chi-square construction)."""
    out = np.zeros(size)
    for j in range(1, t + 1):
        out += np.log(rng.gamma(shape=float(r - j + 1), scale=1.0, size=size))
    return out


@dataclass(frozen=True)
class DetLogVerifyResult:
    mean: McEstimate
    var: McEstimate
    mean_closed_form: float
    var_closed_form: float
    cdf_distance: float

    def mean_agrees(self, k: float = 4.0) -> bool:
        return abs(self.mean.mean - self.mean_closed_form) <= k * self.mean.std_err

    def var_agrees(self, k: float = 4.0) -> bool:
        return abs(self.var.mean - self.var_closed_form) <= k * self.var.std_err


def det_log_verify(t: int, r: int, mc: McConfig) -> DetLogVerifyResult:
    """Empirical ln det(H^H H) moments vs closed forms, plus the two-sample
    CDF distance between matrix sampling and the chi-square construction."""
    cfg = MimoConfig(t, r, 1.0)  # validates t <= r
    sizes = batch_sizes(mc)
    gens = batch_generators(mc, stream_tag=(5,))

    def one(rng, nb):
        mats, cons = [], []
        for chunk in _chunk_sizes(nb, max(_CHUNK // (r * t), 1)):
            mats.append(_log_det_matrices(t, r, rng, chunk))
            cons.append(_log_det_construction(t, r, rng, chunk))
        return np.concatenate(mats), np.concatenate(cons)

    parts = map_batches(one, gens, sizes)
    w = np.concatenate([p[0] for p in parts])
    w2 = np.concatenate([p[1] for p in parts])
    n = w.size
    z = mc.z_value
    mean = float(w.mean())
    dev = w - mean
    var = float(np.mean(dev ** 2))
    m4 = float(np.mean(dev ** 4))
    mean_cf = mimo_capacity_fdt(cfg) + t * math.log(math.pi * math.e)
    var_cf = mimo_dispersion_fdt(cfg) - t
    ks = float(_sp_stats.ks_2samp(w, w2, method="asymp").statistic)
    return DetLogVerifyResult(
        mean=McEstimate.from_moments(mean, var, n, z),
        var=McEstimate.from_moments(var, max(m4 - var * var, 0.0), n, z),
        mean_closed_form=mean_cf,
        var_closed_form=var_cf,
        cdf_distance=ks,
    )


# ---------------------------------------------------------------------------
# log chi-square density vs the standard normal
# ---------------------------------------------------------------------------


def log_chi2_pdf(n: int, y: np.ndarray) -> np.ndarray:
    """Density of Y_n = (ln X - ln n) / sqrt(2/n) for X ~ chi-square(n)."""
    y = np.asarray(y, dtype=np.float64)
    half = 0.5 * n
    log_norm = (half - 0.5) * math.log(half) - ln_gamma(half)
    root = math.sqrt(half)
    expo = root * y - half * np.exp(y / root)
    return np.exp(log_norm + expo)


def _normal_pdf(y):
    return np.exp(-0.5 * np.asarray(y) ** 2) / math.sqrt(2.0 * math.pi)


def log_chi2_tv_error(n: int, spec: QuadratureSpec = QuadratureSpec(abs_tol=1e-11, rel_tol=1e-9)) -> tuple[float, float, float]:
    """Total-variation distance between the log-chi-square density and N(0,1).

    Returns (tv, peak_location, peak_magnitude) where the peak refers to the
    pointwise error max on y > 0 (the error is nearly antisymmetric; the
    matching negative-side extremum sits near -peak_location).
    """
    if n < 2:
        raise DomainError("n must be >= 2")

    def diff(y: float) -> float:
        return float(log_chi2_pdf(n, y) - _normal_pdf(y))

    # locate sign changes of the error on a dense grid, then refine
    lo, hi = -80.0, 40.0
    grid = np.linspace(-12.0, 12.0, 4801)
    vals = np.array([diff(float(g)) for g in grid])
    signs = np.sign(vals)
    zeros = []
    from .numerics import BracketedRoot, find_root

    for k in range(len(grid) - 1):
        if signs[k] != 0 and signs[k + 1] != 0 and signs[k] != signs[k + 1]:
            zeros.append(find_root(diff, BracketedRoot(float(grid[k]), float(grid[k + 1]), 1e-12)))
    pieces = [lo] + zeros + [hi]
    tv = 0.0
    for a, b in zip(pieces[:-1], pieces[1:]):
        tv += abs(integrate(diff, spec, (a, b)))

    # positive-side peak of |diff| (near sqrt(3) for large n)
    y_peak, peak = maximize_unimodal(lambda y: abs(diff(y)), 0.3, 6.0, tol=1e-10)
    return tv, y_peak, peak
