"""Gallager exponents: the IC curve against Gamma-function oracles, exact
Gaussian-input E0, and the MIMO Monte Carlo paths."""

import math

import numpy as np
import pytest

from icfading.errors import DomainError, MomentDivergenceError
from icfading.exponents import (
    e0_gaussian_scalar,
    ic_exponent_scalar,
    mimo_e0_uniform_highsnr,
    mimo_gallager_exponent,
    near_capacity_parabola,
)
from icfading.fading import Awgn, Nakagami, rayleigh
from icfading.mimo import MimoConfig, telatar_capacity
from icfading.numerics import QuadratureSpec, integrate, ln_gamma
from icfading.sampling import McConfig
from icfading.scalar import capacity_dispersion_real

EULER = 0.5772156649015329
DELTA_CR_RAYLEIGH = -2.7472671364953573  # 0.5 ln(1/(4 pi e)) - (gamma + 2 ln 2)/2


def _gamma_neg_moment(m, rho):
    """Oracle: E{H^-rho} = m^{rho/2} Gamma(m - rho/2) / Gamma(m) for Nakagami."""
    return math.exp(0.5 * rho * math.log(m) + ln_gamma(m - 0.5 * rho) - ln_gamma(m))


class TestIcExponentScalar:
    def test_zero_at_capacity(self):
        dr = capacity_dispersion_real(rayleigh(), 1.0)
        curve = ic_exponent_scalar(rayleigh(), 1.0, [dr.delta_star])
        assert curve.e_r[0] == pytest.approx(0.0, abs=1e-12)
        assert curve.rho_star[0] == 0.0
        assert curve.capacity_x == pytest.approx(dr.delta_star, abs=1e-12)

    def test_critical_point_frozen_oracle(self):
        curve = ic_exponent_scalar(rayleigh(), 1.0, [-3.0])
        assert curve.critical_x == pytest.approx(DELTA_CR_RAYLEIGH, abs=1e-6)

    def test_rayleigh_moment_oracles(self):
        # the quadrature path must match the Gamma shortcut oracles
        from icfading.exponents import _ic_components

        delta_star, e_ln_h, neg, cross = _ic_components(rayleigh(), 1.0, QuadratureSpec())
        assert neg(1.0) == pytest.approx(math.sqrt(math.pi), rel=1e-9)
        assert neg(0.5) == pytest.approx(_gamma_neg_moment(1.0, 0.5), rel=1e-9)
        assert cross(1.0) / neg(1.0) == pytest.approx(-(EULER + 2 * math.log(2)) / 2, rel=1e-9)

    def test_linear_branch_slope(self):
        grid = [DELTA_CR_RAYLEIGH - 1.0, DELTA_CR_RAYLEIGH - 0.6, DELTA_CR_RAYLEIGH - 0.2]
        curve = ic_exponent_scalar(rayleigh(), 1.0, grid)
        assert np.all(curve.rho_star == 1.0)
        d1 = (curve.e_r[1] - curve.e_r[0]) / (curve.x[1] - curve.x[0])
        d2 = (curve.e_r[2] - curve.e_r[1]) / (curve.x[2] - curve.x[1])
        assert d1 == pytest.approx(-1.0, abs=1e-9)
        assert d2 == pytest.approx(-1.0, abs=1e-9)

    def test_branch_continuity(self):
        h = 1e-7
        curve = ic_exponent_scalar(rayleigh(), 1.0,
                                   [DELTA_CR_RAYLEIGH - h, DELTA_CR_RAYLEIGH + h])
        assert abs(curve.e_r[0] - curve.e_r[1]) <= 1e-6

    def test_curve_shape_invariants(self):
        dr = capacity_dispersion_real(rayleigh(), 1.0)
        curve = ic_exponent_scalar(rayleigh(), 1.0, grid_points=80)
        # nonincreasing, convex in x; rho* from 1 to 0, nonincreasing
        diffs = np.diff(curve.e_r)
        assert np.all(diffs <= 1e-12)
        second = np.diff(curve.e_r, 2)
        assert np.all(second >= -1e-8)
        assert np.all(np.diff(curve.rho_star) <= 1e-9)
        assert curve.rho_star[0] == 1.0
        assert curve.rho_star[-1] == pytest.approx(0.0, abs=1e-6)
        assert curve.e_r[-1] < 1e-6  # endpoint at capacity

    def test_divergent_inverse_moment_detected(self):
        with pytest.raises(MomentDivergenceError) as err:
            ic_exponent_scalar(Nakagami(0.5), 1.0, [-3.0])
        assert "H^-1" in str(err.value.moment)

    def test_matches_brute_force_maximizer(self):
        from icfading.exponents import _ic_components, _ic_e0

        delta_star, e_ln_h, neg, cross = _ic_components(rayleigh(), 1.0, QuadratureSpec())
        grid_rho = np.linspace(0.0, 1.0, 2001)
        e0 = np.array([_ic_e0(delta_star, e_ln_h, neg, float(r)) for r in grid_rho])
        for d in (-4.0, -2.747, -2.4, -2.0, -1.75):
            brute = float(np.max(e0 - grid_rho * d))
            curve = ic_exponent_scalar(rayleigh(), 1.0, [d])
            assert curve.e_r[0] == pytest.approx(brute, abs=1e-6)

    def test_ic_limit_from_finite_cube_quadrature(self):
        # independent oracle: the uniform-input E0 evaluated by nested
        # quadrature at finite cube sides approaches the a -> infinity form
        from scipy import integrate as si
        from scipy.special import ndtr

        from icfading.exponents import _ic_components, _ic_e0

        sigma, rho = 1.0, 1.0
        s = sigma * math.sqrt(1.0 + rho)
        c_norm = (2 * math.pi * sigma ** 2) ** (-1.0 / (2 * (1 + rho))) \
            * math.sqrt(2 * math.pi) * s

        def e0_exact(a):
            def f_of_h(h):
                def inner(y):
                    lo = (-a * h / 2 - y) / s
                    hi = (a * h / 2 - y) / s
                    return ((ndtr(hi) - ndtr(lo)) * c_norm / (a * h)) ** (1.0 + rho)

                pts = [-a * h / 2, a * h / 2] if a * h / 2 < 1e4 else None
                val, _ = si.quad(inner, -a * h / 2 - 12 * s, a * h / 2 + 12 * s,
                                 points=pts, limit=800)
                return val

            def integrand(h):
                return 2.0 * h * math.exp(-h * h) * f_of_h(h)

            cut = 20.0 * s / a
            v1, _ = si.quad(integrand, 0.0, cut, limit=200)
            v2, _ = si.quad(integrand, cut, 12.0, limit=200)
            return -math.log(v1 + v2)

        delta_star, e_ln_h, neg, _ = _ic_components(rayleigh(), 1.0, QuadratureSpec())
        ic_limit = _ic_e0(delta_star, e_ln_h, neg, rho)
        gaps = [abs(e0_exact(a) - rho * math.log(a) - ic_limit) for a in (300.0, 1000.0)]
        assert gaps[1] < gaps[0]          # cube-edge term decays with a
        assert gaps[1] < 0.02             # and is already small at a = 1000


class TestNearCapacityParabola:
    def test_gap_zero_convention(self):
        dr = capacity_dispersion_real(rayleigh(), 1.0)
        curve = ic_exponent_scalar(rayleigh(), 1.0, [dr.delta_star])
        ratios = near_capacity_parabola(curve, dr.v)
        assert ratios == [(0.0, 1.0)]

    @pytest.mark.parametrize("model", [rayleigh(), Awgn()])
    def test_ratio_near_one_at_small_gap(self, model):
        dr = capacity_dispersion_real(model, 1.0)
        gap = 0.01 * math.sqrt(dr.v)
        curve = ic_exponent_scalar(model, 1.0, [dr.delta_star - gap])
        (g, ratio), = near_capacity_parabola(curve, dr.v)
        assert g == pytest.approx(gap, abs=1e-12)
        assert 0.95 <= ratio <= 1.05

    def test_ratios_monotone_toward_one(self):
        dr = capacity_dispersion_real(rayleigh(), 1.0)
        s = math.sqrt(dr.v)
        gaps = [0.04 * s, 0.02 * s, 0.01 * s]
        curve = ic_exponent_scalar(rayleigh(), 1.0, [dr.delta_star - g for g in gaps])
        ratios = [r for _, r in near_capacity_parabola(curve, dr.v)]
        errs = np.abs(np.array(ratios) - 1.0)
        # grid point order is ascending in x, i.e. shrinking gap
        assert errs[0] > errs[1] > errs[2]


class TestE0Gaussian:
    def test_zero_rho(self):
        assert e0_gaussian_scalar(rayleigh(), 5.0, 0.0) == 0.0

    def test_awgn_point(self):
        val = e0_gaussian_scalar(Awgn(), 1.0, 1.0)
        assert val == pytest.approx(0.5 * math.log(1.5), abs=1e-12)

    def test_rayleigh_against_monte_carlo(self):
        snr, rho = 100.0, 0.5
        val = e0_gaussian_scalar(rayleigh(), snr, rho)
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(77)))
        hsq = rng.exponential(1.0, 1_000_000)
        samples = (1.0 + hsq * snr / (1.0 + rho)) ** (-0.5 * rho)
        mean = samples.mean()
        se = samples.std() / 1000.0
        assert math.exp(-val) == pytest.approx(mean, abs=4 * se)

    def test_concave_nondecreasing_in_rho(self):
        grid = np.linspace(0.0, 1.0, 21)
        vals = [e0_gaussian_scalar(rayleigh(), 10.0, float(r)) for r in grid]
        assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))
        second = np.diff(vals, 2)
        assert np.all(second <= 1e-9)


class TestMimoGallager:
    def test_e0_zero_at_rho_zero(self):
        mc = McConfig(samples=20_000, seed=40, batches=4)
        curve = mimo_gallager_exponent(MimoConfig(2, 2, 1.0), 10.0, rate_grid=[1.0], mc=mc)
        assert curve.extras["e0_grid"][0] == 0.0

    def test_exponent_vanishes_at_capacity(self):
        cfg = MimoConfig(2, 2, 1.0)
        mc = McConfig(samples=200_000, seed=41, batches=16)
        c = telatar_capacity(cfg, 100.0)
        curve = mimo_gallager_exponent(cfg, 100.0, rate_grid=[c], mc=mc)
        band = 2.0 * float(curve.extras["e0_std_err"].max())
        assert curve.e_r[0] <= band

    def test_1x1_reduces_to_exponential_fading_quadrature(self):
        snr, rho = 10.0, 0.6
        mc = McConfig(samples=500_000, seed=42, batches=16)
        curve = mimo_gallager_exponent(MimoConfig(1, 1, 1.0), snr, rate_grid=[1.0], mc=mc)
        from scipy.interpolate import PchipInterpolator

        interp = PchipInterpolator(curve.extras["rho_grid"], curve.extras["e0_grid"])
        oracle = -math.log(integrate(
            lambda lam: (1.0 + snr / (1 + rho) * lam) ** (-rho) * math.exp(-lam),
            QuadratureSpec(kind="gauss-laguerre"), (0.0, math.inf),
        ))
        assert float(interp(rho)) == pytest.approx(oracle, abs=4e-3)

    def test_e0_grid_concave_nondecreasing(self):
        mc = McConfig(samples=100_000, seed=43, batches=8)
        curve = mimo_gallager_exponent(MimoConfig(2, 3, 1.0), 50.0, rate_grid=[1.0], mc=mc)
        e0 = curve.extras["e0_grid"]
        assert np.all(np.diff(e0) >= -1e-10)
        assert np.all(np.diff(e0, 2) <= 1e-6)

    def test_rho_star_monotone_on_default_grid(self):
        mc = McConfig(samples=100_000, seed=44, batches=8)
        curve = mimo_gallager_exponent(MimoConfig(2, 2, 1.0), 100.0, mc=mc)
        assert np.all(np.diff(curve.rho_star) <= 1e-6)
        assert curve.rho_star[0] == 1.0
        assert curve.rho_star[-1] <= 1e-6
        assert np.all(np.diff(curve.e_r) <= 1e-9)


class TestMimoE0Uniform:
    def test_zero_rho(self):
        res = mimo_e0_uniform_highsnr(MimoConfig(2, 2, 1.0), 0.0,
                                      McConfig(samples=1000, seed=1, batches=2))
        assert res.value == 0.0 and not res.heavy_tail_flag

    def test_parabola_v_matches_dispersion(self):
        res = mimo_e0_uniform_highsnr(MimoConfig(2, 2, 1.0), 0.05,
                                      McConfig(samples=1_000_000, seed=31, batches=16))
        assert res.v_near_capacity == pytest.approx(1.0 + math.pi ** 2 / 3.0, abs=0.1)
        assert not res.heavy_tail_flag

    def test_inverse_chi_square_mean(self):
        # E{det^-1} for t=1: 1/(r-1) scaling oracle of the inverse chi-square mean
        res = mimo_e0_uniform_highsnr(MimoConfig(1, 2, 1.0), 1.0,
                                      McConfig(samples=400_000, seed=33, batches=16))
        est = res.det_neg_moment
        assert est.mean == pytest.approx(1.0, abs=4 * est.std_err)
        assert not res.heavy_tail_flag

    def test_heavy_tail_flag_square_case(self):
        res = mimo_e0_uniform_highsnr(MimoConfig(2, 2, 1.0), 1.0,
                                      McConfig(samples=100_000, seed=32, batches=16))
        assert res.heavy_tail_flag

    def test_rho_domain(self):
        with pytest.raises(DomainError):
            mimo_e0_uniform_highsnr(MimoConfig(2, 2, 1.0), 1.5,
                                    McConfig(samples=1000, seed=0, batches=2))
