"""Special functions, quadrature, root finding and 1-D maximization.

Every routine here is pure and reentrant. The special functions are
implemented in-repo (Lanczos log-gamma, recurrence + asymptotic series for
psi/psi', erfc-backed Q with a rational-approximation inverse) so that test
values are bit-stable across platforms; scipy is used only for adaptive
interval quadrature and bracketed root polishing, both behind the contracts
below.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Literal, Sequence

import numpy as np
from scipy import integrate as _sp_integrate
from scipy import optimize as _sp_optimize

from .errors import AccuracyError, BracketError, DomainError

__all__ = [
    "QuadratureSpec",
    "BracketedRoot",
    "ln_gamma",
    "digamma",
    "trigamma",
    "q_function",
    "q_inverse",
    "ln_ball_volume",
    "laguerre_assoc",
    "regularized_gamma_upper",
    "integrate",
    "find_root",
    "maximize_unimodal",
    "LN_2PI",
    "EULER_GAMMA",
]

LN_2PI = math.log(2.0 * math.pi)
EULER_GAMMA = 0.57721566490153286
_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerance/kind bundle for the integrate() dispatcher.

    kind "adaptive" integrates on a finite interval (or a half-line by
    adaptive transform); kind "gauss-laguerre" targets smooth half-line
    integrands carrying an exp(-x) weight.
    """

    kind: Literal["adaptive", "gauss-laguerre"] = "adaptive"
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    max_subdivisions: int = 200

    def __post_init__(self):
        if not (self.abs_tol > 0.0 and self.rel_tol > 0.0):
            raise DomainError("quadrature tolerances must be strictly positive")
        if self.max_subdivisions < 1:
            raise DomainError("max_subdivisions must be >= 1")


@dataclass(frozen=True)
class BracketedRoot:
    """Root bracket; the sign change is verified at call time by find_root."""

    lo: float
    hi: float
    tol: float = 1e-12

    def __post_init__(self):
        if not self.tol > 0.0:
            raise DomainError("bracket tolerance must be strictly positive")
        if not self.lo < self.hi:
            raise DomainError("bracket requires lo < hi")


# ---------------------------------------------------------------------------
# gamma-family special functions
# ---------------------------------------------------------------------------

# Lanczos g=7, n=9 coefficients (double-precision classic set).
_LANCZOS_G = 7.0
_LANCZOS_C = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


def ln_gamma(x: float) -> float:
    """Natural log of the Gamma function for x > 0 (Lanczos approximation)."""
    if not x > 0.0:
        raise DomainError(f"ln_gamma requires x > 0, got {x}")
    if x < 0.5:
        # reflection keeps the Lanczos sum in its accurate region
        return math.log(math.pi / math.sin(math.pi * x)) - ln_gamma(1.0 - x)
    z = x - 1.0
    acc = _LANCZOS_C[0]
    for i in range(1, 9):
        acc += _LANCZOS_C[i] / (z + i)
    t = z + _LANCZOS_G + 0.5
    return 0.5 * LN_2PI + (z + 0.5) * math.log(t) - t + math.log(acc)


def digamma(x: float) -> float:
    """psi(x) = d/dx ln Gamma(x) for x > 0; recurrence into the asymptotic zone."""
    if not x > 0.0:
        raise DomainError(f"digamma requires x > 0, got {x}")
    value = 0.0
    while x < 10.0:
        value -= 1.0 / x
        x += 1.0
    inv = 1.0 / x
    inv2 = inv * inv
    # Stirling series with Bernoulli terms through B12
    series = (
        math.log(x)
        - 0.5 * inv
        - inv2
        * (
            1.0 / 12.0
            - inv2
            * (
                1.0 / 120.0
                - inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0 - inv2 * 691.0 / 32760.0)))
            )
        )
    )
    return value + series


def trigamma(x: float) -> float:
    """psi'(x) for x > 0."""
    if not x > 0.0:
        raise DomainError(f"trigamma requires x > 0, got {x}")
    value = 0.0
    while x < 10.0:
        value += 1.0 / (x * x)
        x += 1.0
    inv = 1.0 / x
    inv2 = inv * inv
    series = inv * (
        1.0
        + inv * 0.5
        + inv2
        * (
            1.0 / 6.0
            - inv2
            * (
                1.0 / 30.0
                - inv2 * (1.0 / 42.0 - inv2 * (1.0 / 30.0 - inv2 * (5.0 / 66.0 - inv2 * 691.0 / 2730.0)))
            )
        )
    )
    return value + series


def ln_ball_volume(dim: int) -> float:
    """ln of the unit-ball volume pi^{n/2} / Gamma(n/2 + 1) in n dimensions."""
    if dim < 1:
        raise DomainError(f"ln_ball_volume requires dim >= 1, got {dim}")
    return 0.5 * dim * math.log(math.pi) - ln_gamma(0.5 * dim + 1.0)


def laguerre_assoc(k: int, alpha: int, x: float) -> float:
    """Associated Laguerre polynomial L_k^alpha(x) by the stable three-term recurrence."""
    if k < 0 or alpha < 0:
        raise DomainError("laguerre_assoc requires k >= 0 and alpha >= 0")
    if x < 0.0:
        raise DomainError("laguerre_assoc requires x >= 0")
    if k == 0:
        return 1.0
    prev, cur = 1.0, 1.0 + alpha - x
    for j in range(1, k):
        prev, cur = cur, ((2 * j + 1 + alpha - x) * cur - (j + alpha) * prev) / (j + 1)
    return cur


# ---------------------------------------------------------------------------
# Gaussian tail
# ---------------------------------------------------------------------------


def q_function(x: float) -> float:
    """Upper tail of the standard normal, Pr{N(0,1) > x}."""
    return 0.5 * math.erfc(x / _SQRT2)


# Acklam's rational approximation for the standard normal quantile.
_ACK_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
          1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_ACK_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
          6.680131188771972e+01, -1.328068155288572e+01)
_ACK_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
          -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_ACK_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
          3.754408661907416e+00)


def _norm_quantile(p: float) -> float:
    """Phi^{-1}(p) for 0 < p < 1 (Acklam initial guess, refined by caller)."""
    p_low, p_high = 0.02425, 1.0 - 0.02425
    if p < p_low:
        q = math.sqrt(-2.0 * math.log(p))
        num = ((((_ACK_C[0] * q + _ACK_C[1]) * q + _ACK_C[2]) * q + _ACK_C[3]) * q + _ACK_C[4]) * q + _ACK_C[5]
        den = (((_ACK_D[0] * q + _ACK_D[1]) * q + _ACK_D[2]) * q + _ACK_D[3]) * q + 1.0
        return num / den
    if p > p_high:
        return -_norm_quantile(1.0 - p)
    q = p - 0.5
    r = q * q
    num = (((((_ACK_A[0] * r + _ACK_A[1]) * r + _ACK_A[2]) * r + _ACK_A[3]) * r + _ACK_A[4]) * r + _ACK_A[5]) * q
    den = ((((_ACK_B[0] * r + _ACK_B[1]) * r + _ACK_B[2]) * r + _ACK_B[3]) * r + _ACK_B[4]) * r + 1.0
    return num / den


def q_inverse(p: float) -> float:
    """Inverse of q_function on (0, 1); Newton-polished to ~1e-13.

    The upper half is solved through the mirror q_inverse(p) = -q_inverse(1-p)
    (1-p is exact for p in (0.5, 1)), which keeps the Newton residual fully
    conditioned on both tails.
    """
    if not (0.0 < p < 1.0):
        raise DomainError(f"q_inverse requires p in (0,1), got {p}")
    if p > 0.5:
        return -q_inverse(1.0 - p)
    x = -_norm_quantile(p)
    # two Newton steps against the accurate q_function; derivative is -phi(x)
    for _ in range(2):
        err = q_function(x) - p
        phi = math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
        if phi <= 0.0:
            break
        x += err / phi
    return x


# ---------------------------------------------------------------------------
# regularized incomplete gamma (upper)
# ---------------------------------------------------------------------------


def regularized_gamma_upper(s: float, x: float) -> float:
    """Q(s, x) = Gamma(s, x) / Gamma(s); the chi-square(n) tail is Q(n/2, t/2)."""
    if not s > 0.0:
        raise DomainError(f"regularized_gamma_upper requires s > 0, got {s}")
    if x < 0.0:
        raise DomainError(f"regularized_gamma_upper requires x >= 0, got {x}")
    if x == 0.0:
        return 1.0
    if x < s + 1.0:
        return 1.0 - _gamma_lower_series(s, x)
    return _gamma_upper_cf(s, x)


def _gamma_lower_series(s: float, x: float) -> float:
    """P(s,x) by the standard lower series; converges fast for x < s+1."""
    term = 1.0 / s
    total = term
    k = s
    for _ in range(500):
        k += 1.0
        term *= x / k
        total += term
        if abs(term) < abs(total) * 1e-16:
            break
    log_prefix = s * math.log(x) - x - ln_gamma(s)
    return total * math.exp(log_prefix) if log_prefix > -745.0 else 0.0


def _gamma_upper_cf(s: float, x: float) -> float:
    """Q(s,x) by the Lentz continued fraction; converges fast for x >= s+1."""
    tiny = 1e-300
    b = x + 1.0 - s
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 500):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    log_prefix = s * math.log(x) - x - ln_gamma(s)
    return h * math.exp(log_prefix) if log_prefix > -745.0 else 0.0


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------

_GL_NODE_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gauss_laguerre_nodes(n: int) -> tuple[np.ndarray, np.ndarray]:
    if n not in _GL_NODE_CACHE:
        _GL_NODE_CACHE[n] = np.polynomial.laguerre.laggauss(n)
    return _GL_NODE_CACHE[n]


def _gauss_laguerre_value(f: Callable[[float], float], n: int) -> float:
    """Integral of f over [0, inf) using n-point Gauss-Laguerre.

    Nodes/weights absorb an exp(-x) factor, so the integrand is rescaled with
    exp(+x); f itself must decay at least exponentially.
    """
    nodes, weights = _gauss_laguerre_nodes(n)
    vals = np.array([f(float(t)) for t in nodes])
    return float(np.sum(weights * np.exp(nodes) * vals))


def integrate(
    f: Callable[[float], float],
    spec: QuadratureSpec,
    domain: tuple[float, float] | Sequence[float],
) -> float:
    """Integrate f over an interval or half-line to the requested tolerance.

    domain is (a, b) with b possibly math.inf. Gauss-Laguerre (64-node
    default) is tried first for half-line specs; if the 64/96-node values
    disagree beyond rel_tol the adaptive path takes over.
    """
    a, b = float(domain[0]), float(domain[1])
    half_line = math.isinf(b)
    if spec.kind == "gauss-laguerre":
        if not half_line or a != 0.0:
            raise DomainError("gauss-laguerre quadrature requires the domain [0, inf)")
        v64 = _gauss_laguerre_value(f, 64)
        v96 = _gauss_laguerre_value(f, 96)
        scale = max(abs(v64), abs(v96), spec.abs_tol)
        if abs(v64 - v96) <= spec.rel_tol * scale:
            return v96
        # fall through to adaptive when the node-doubling check fails
    result, abserr, info = _sp_integrate.quad(
        f, a, b,
        epsabs=spec.abs_tol,
        epsrel=spec.rel_tol,
        limit=spec.max_subdivisions,
        full_output=True,
    )[:3]
    # scipy packs a message after info when the integral is flagged
    if not np.isfinite(result):
        raise AccuracyError("quadrature produced a non-finite value", best_estimate=result)
    if abserr > spec.abs_tol + spec.rel_tol * abs(result) and abserr > 1e3 * spec.abs_tol:
        raise AccuracyError(
            f"quadrature did not converge (abserr={abserr:.3e})", best_estimate=result
        )
    return result


# ---------------------------------------------------------------------------
# root finding / 1-D maximization
# ---------------------------------------------------------------------------


def find_root(f: Callable[[float], float], bracket: BracketedRoot) -> float:
    """Root of f inside a sign-changing bracket, to bracket.tol in x."""
    flo, fhi = f(bracket.lo), f(bracket.hi)
    if flo == 0.0:
        return bracket.lo
    if fhi == 0.0:
        return bracket.hi
    if flo * fhi > 0.0:
        raise BracketError(
            f"no sign change over [{bracket.lo}, {bracket.hi}]: f(lo)={flo:.3e}, f(hi)={fhi:.3e}"
        )
    return float(_sp_optimize.brentq(f, bracket.lo, bracket.hi, xtol=bracket.tol))


_INV_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def maximize_unimodal(
    f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-9
) -> tuple[float, float]:
    """Golden-section maximizer; the caller asserts f is unimodal on [lo, hi].

    Returns (argmax, max).
    """
    if not tol > 0.0:
        raise DomainError("tolerance must be strictly positive")
    if not lo < hi:
        raise DomainError("maximize_unimodal requires lo < hi")
    a, b = lo, hi
    x1 = b - _INV_GOLDEN * (b - a)
    x2 = a + _INV_GOLDEN * (b - a)
    f1, f2 = f(x1), f(x2)
    while b - a > tol:
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + _INV_GOLDEN * (b - a)
            f2 = f(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - _INV_GOLDEN * (b - a)
            f1 = f(x1)
    xm = 0.5 * (a + b)
    return xm, f(xm)
