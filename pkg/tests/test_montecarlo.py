"""Monte Carlo estimators: reproducibility, analytic cross-checks and the
independent quadrature oracle for the dependence-testing bound."""

import math
import warnings

import numpy as np
import pytest
from scipy.special import ndtr

from icfading.errors import AccuracyWarning, DomainError
from icfading.fading import Awgn, rayleigh
from icfading.mimo import MimoConfig
from icfading.montecarlo import (
    _guard_check,
    _sp_samples,
    det_log_verify,
    dt_achievable_nld,
    dt_bound,
    dt_bound_from_info_density,
    info_density_moments,
    lattice_typicality_bound,
    log_chi2_pdf,
    log_chi2_tv_error,
    sphere_packing_bound,
    sphere_packing_converse_nld,
)
from icfading.numerics import ln_ball_volume, q_function
from icfading.sampling import McConfig, McEstimate, batch_sizes
from icfading.scalar import achievable_nld, capacity_dispersion_real

EULER = 0.5772156649015329


def _mc(samples=100_000, seed=0, batches=16):
    return McConfig(samples=samples, seed=seed, batches=batches)


class TestMcPlumbing:
    def test_config_validation(self):
        with pytest.raises(DomainError):
            McConfig(samples=0)
        with pytest.raises(DomainError):
            McConfig(samples=4, batches=8)
        with pytest.raises(DomainError):
            McConfig(confidence=1.2)

    def test_estimate_ci_relation(self):
        mc = _mc()
        est = McEstimate.from_moments(0.3, 0.04, 10_000, mc.z_value)
        assert est.ci_half_width == pytest.approx(mc.z_value * est.std_err, abs=1e-15)

    def test_batch_sizes_partition(self):
        mc = McConfig(samples=103, seed=0, batches=8)
        sizes = batch_sizes(mc)
        assert sum(sizes) == 103 and max(sizes) - min(sizes) <= 1

    def test_estimate_json_record(self):
        est = McEstimate.from_moments(0.25, 0.01, 400, 1.96, seed=7)
        rec = est.to_record()
        assert rec["mean"] == 0.25 and rec["seed"] == 7
        assert set(rec) >= {"mean", "std_err", "n_effective", "ci_half_width"}


class TestReproducibility:
    def test_sphere_packing_bit_identical(self):
        mc = _mc(samples=50_000, seed=42)
        a = sphere_packing_bound(rayleigh(), 32, -2.1, 1.0, mc)
        b = sphere_packing_bound(rayleigh(), 32, -2.1, 1.0, mc)
        assert (a.mean, a.std_err) == (b.mean, b.std_err)

    def test_dt_bound_bit_identical(self):
        mc = _mc(samples=20_000, seed=9, batches=4)
        a = dt_bound(rayleigh(), 8, 1e3, 64, 1.0, mc)
        b = dt_bound(rayleigh(), 8, 1e3, 64, 1.0, mc)
        assert (a.mean, a.std_err) == (b.mean, b.std_err)

    def test_seed_changes_stream(self):
        a = dt_bound(rayleigh(), 8, 1e3, 64, 1.0, _mc(20_000, seed=1, batches=4))
        b = dt_bound(rayleigh(), 8, 1e3, 64, 1.0, _mc(20_000, seed=2, batches=4))
        assert a.mean != b.mean

    def test_batch_consistency(self):
        mc = _mc(samples=160_000, seed=3, batches=8)
        d = _sp_samples(rayleigh(), 32, 1.0, mc, complex_domain=False)
        delta = -2.0
        hits = (d <= delta).astype(float)
        per_batch = [chunk.mean() for chunk in np.split(hits, 8)]
        pooled = hits.mean()
        se = math.sqrt(pooled * (1 - pooled) / hits.size)
        assert max(abs(m - pooled) for m in per_batch) < 6 * se * math.sqrt(8)


class TestSpherePacking:
    def test_certain_event_at_large_delta(self):
        est = sphere_packing_bound(rayleigh(), 16, 25.0, 1.0, _mc(10_000, 1, 4))
        assert est.mean == 1.0

    def test_awgn_matches_incomplete_gamma(self):
        # analytic column is attached and the 4-sigma cross-check runs inside
        delta_star = capacity_dispersion_real(Awgn(), 1.0).delta_star
        est = sphere_packing_bound(Awgn(), 16, delta_star - 0.5, 1.0, _mc(10_000_000, 5, 16))
        analytic = est.extras["analytic"]
        threshold = math.exp(-2.0 * (delta_star - 0.5) - 2.0 * ln_ball_volume(16) / 16)
        from icfading.numerics import regularized_gamma_upper

        assert analytic == pytest.approx(regularized_gamma_upper(8.0, threshold / 2.0), rel=1e-12)

    def test_rayleigh_normal_approximation_oracle(self):
        # P_e^SB at the first-order NLD is close to Q((delta*-delta+ln(n)/2n)/sqrt(V/n))
        n, eps = 100, 1e-3
        dr = capacity_dispersion_real(rayleigh(), 1.0)
        delta = achievable_nld(dr, n, eps).nld
        est = sphere_packing_bound(rayleigh(), n, delta, 1.0, _mc(2_000_000, 6, 16))
        oracle = q_function(
            (dr.delta_star - delta + math.log(n) / (2 * n)) / math.sqrt(dr.v / n)
        )
        assert est.mean >= 1e-4  # converse consistency: same order as eps
        assert est.mean == pytest.approx(oracle, rel=0.5)

    def test_complex_awgn_against_analytic_tail(self):
        # complex degenerate channel: Pr{chi2_2n >= 2 e^-delta V_2n^(-1/n) / s2}
        from icfading.numerics import regularized_gamma_upper

        n, delta, s2 = 16, -2.4, 1.0
        est = sphere_packing_bound(Awgn(), n, delta, s2, _mc(400_000, 26), complex_domain=True)
        threshold = math.exp(-delta - ln_ball_volume(2 * n) / n)
        expect = regularized_gamma_upper(float(n), threshold / s2)
        assert est.mean == pytest.approx(expect, abs=4 * est.std_err)

    def test_mimo_1x1_matches_complex_scalar_rayleigh(self):
        # same law: ln det(H^H H) for 1x1 is ln|H|^2 with Rayleigh amplitude
        n, delta = 12, -4.0
        est_c = sphere_packing_bound(rayleigh(), n, delta, 1.0, _mc(400_000, 27),
                                     complex_domain=True)
        est_m = sphere_packing_bound(MimoConfig(1, 1, 1.0), n, delta, 1.0, _mc(400_000, 28))
        band = 4 * math.hypot(est_c.std_err, est_m.std_err)
        assert est_m.mean == pytest.approx(est_c.mean, abs=band)

    def test_mimo_path_runs(self):
        est_m = sphere_packing_bound(MimoConfig(2, 2, 1.0), 8, -10.0, 1.0, _mc(50_000, 7))
        assert 0.0 <= est_m.mean <= 1.0

    def test_monotone_in_delta(self):
        mc = _mc(100_000, 8)
        vals = [sphere_packing_bound(rayleigh(), 32, d, 1.0, mc).mean
                for d in (-2.6, -2.2, -1.8, -1.4)]
        assert all(a <= b for a, b in zip(vals, vals[1:]))

    def test_converse_inversion_hits_target(self):
        n, eps = 32, 1e-2
        mc = _mc(400_000, 11)
        conv = sphere_packing_converse_nld(rayleigh(), n, eps, 1.0, mc)
        est = sphere_packing_bound(rayleigh(), n, conv.mean, 1.0, mc)
        assert est.mean == pytest.approx(eps, rel=0.05)


class TestDtBound:
    def test_degenerate_constant_identity(self):
        # bound = 1 when ln((M-1)/2) >= c, else ((M-1)/2) e^{-c}
        i = np.full(5, 2.0)
        assert np.all(dt_bound_from_info_density(i, 16) == 1.0)  # ln(7.5) > 2
        vals = dt_bound_from_info_density(i, 4)
        assert vals[0] == pytest.approx(1.5 * math.exp(-2.0), rel=1e-12)

    def test_monotone_in_codebook_size(self):
        mc = _mc(50_000, 12, 8)
        vals = [dt_bound(rayleigh(), 4, 200.0, M, 1.0, mc).mean for M in (16, 64, 256, 1024)]
        assert all(a <= b for a, b in zip(vals, vals[1:]))

    def test_probability_range(self):
        est = dt_bound(rayleigh(), 16, 1e4, 1024, 1.0, _mc(50_000, 13, 8))
        assert 0.0 < est.mean < 1.0

    def test_against_tensor_quadrature_oracle(self):
        # n = 1, Rayleigh, a/sigma = 100, M = 8: deterministic nested quadrature
        a, sigma, M = 100.0, 1.0, 8
        gamma_thr = (M - 1) / 2.0

        gl_x, gl_wx = np.polynomial.legendre.leggauss(96)     # x in (-a/2, a/2)
        la_u, la_wu = np.polynomial.laguerre.laggauss(96)     # u = h^2 ~ Exp(1)
        he_z, he_wz = np.polynomial.hermite.hermgauss(96)     # z ~ N(0, sigma^2)

        x = 0.5 * a * gl_x
        h = np.sqrt(la_u)
        z = math.sqrt(2.0) * sigma * he_z

        X = x[:, None, None]
        H = h[None, :, None]
        Z = z[None, None, :]
        Y = H * X + Z
        q_hi = ndtr(-(Y / sigma - a * H / (2 * sigma)))
        q_lo = ndtr(-(Y / sigma + a * H / (2 * sigma)))
        f_y = (q_hi - q_lo) / (a * H)
        f_z = np.exp(-0.5 * (Z / sigma) ** 2) / (math.sqrt(2 * math.pi) * sigma)
        with np.errstate(divide="ignore"):
            i_val = np.log(f_z) - np.log(f_y)
        integrand = np.exp(-np.maximum(i_val - math.log(gamma_thr), 0.0))
        wx = (gl_wx / 2.0)[:, None, None]          # uniform density on the cube
        wu = la_wu[None, :, None]                  # Exp(1) weight absorbed
        wz = (he_wz / math.sqrt(math.pi))[None, None, :]
        oracle = float(np.sum(wx * wu * wz * integrand))

        est = dt_bound(rayleigh(), 1, a, M, sigma ** 2, _mc(400_000, 21, 16))
        assert est.mean == pytest.approx(oracle, abs=4 * est.std_err + 1e-3)

    def test_guard_warning_budget(self):
        with pytest.warns(AccuracyWarning):
            _guard_check(guarded=100, samples=1000)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            _guard_check(guarded=0, samples=1000)


class TestInfoDensityMoments:
    def test_awgn_variance_limit(self):
        mom = info_density_moments(Awgn(), 1e4, 1.0, _mc(400_000, 14))
        assert mom.variance.mean == pytest.approx(0.5, abs=mom.variance.ci_half_width + 0.01)
        # mutual information at large a/sigma: I - ln a -> (1/2) ln(1/(2 pi e s2))
        i_shift = mom.mean.mean - math.log(1e4)
        expect = capacity_dispersion_real(Awgn(), 1.0).delta_star
        assert i_shift == pytest.approx(expect, abs=mom.mean.ci_half_width + 0.01)

    def test_rayleigh_moments(self):
        mom = info_density_moments(rayleigh(), 1e4, 1.0, _mc(400_000, 15))
        v_expect = capacity_dispersion_real(rayleigh(), 1.0).v
        assert mom.variance.mean == pytest.approx(v_expect, abs=mom.variance.ci_half_width + 0.02)
        i_shift = mom.mean.mean - math.log(1e4)
        expect = capacity_dispersion_real(rayleigh(), 1.0).delta_star
        assert i_shift == pytest.approx(expect, abs=mom.mean.ci_half_width + 0.02)

    def test_dt_achievable_reports_budget(self):
        res = dt_achievable_nld(rayleigh(), 100, 1e-3, 1.0, _mc(100_000, 16))
        assert res.a_over_sigma == pytest.approx(100.0 ** 3)
        assert res.berry_esseen_budget > 0.0
        assert res.offset_constant > 0.0
        assert res.regularity_alpha == pytest.approx(2.0)

    def test_dt_median_eps_drops_variance_term(self):
        mc = _mc(50_000, 17)
        res = dt_achievable_nld(rayleigh(), 64, 0.5, 1.0, mc)
        mom = info_density_moments(rayleigh(), res.a_over_sigma, 1.0, mc)
        assert res.nld == pytest.approx(mom.mean.mean - math.log(res.a_over_sigma), abs=1e-12)


class TestTypicality:
    def test_zero_radius_saturates(self):
        est = lattice_typicality_bound(rayleigh(), 8, -2.0, 1.0, _mc(10_000, 18, 4),
                                       r_decode=1e-12)
        assert est.mean == 1.0  # noise term is the full mass

    def test_awgn_density_term_deterministic(self):
        n, delta, r = 8, -2.2, 2.0
        est = lattice_typicality_bound(Awgn(), n, delta, 1.0, _mc(10_000, 19, 4), r_decode=r)
        expect = math.exp(n * math.log(r) + ln_ball_volume(n) + n * delta)
        assert est.extras["term_density"] == pytest.approx(expect, rel=1e-12)
        assert est.std_err == 0.0

    def test_tuned_radius_total_below_2eps(self):
        n, eps = 32, 0.1
        dr = capacity_dispersion_real(rayleigh(), 1.0)
        delta = achievable_nld(dr, n, eps).nld
        est = lattice_typicality_bound(rayleigh(), n, delta, 1.0, _mc(100_000, 20),
                                       eps=eps)
        assert est.extras["term_density"] == pytest.approx(eps / math.sqrt(n), rel=1e-12)
        assert est.mean <= 2.0 * eps

    def test_tuned_radius_ratio_improves_with_n(self):
        # the ln(n)/n slop shrinks: total/(2 eps) decreases toward ~1/2
        eps = 0.02
        dr = capacity_dispersion_real(rayleigh(), 1.0)
        ratios = []
        for n in (32, 64, 128):
            delta = achievable_nld(dr, n, eps).nld
            est = lattice_typicality_bound(rayleigh(), n, delta, 1.0, _mc(100_000, 20),
                                           eps=eps)
            ratios.append(est.mean / (2 * eps))
        assert ratios[0] > ratios[1] > ratios[2]


class TestDetLog:
    def test_1x1_log_exponential(self):
        res = det_log_verify(1, 1, _mc(400_000, 22))
        assert res.mean.mean == pytest.approx(-EULER, abs=4 * res.mean.std_err)
        assert res.var.mean == pytest.approx(math.pi ** 2 / 6, abs=4 * res.var.std_err)

    def test_2x2_moments(self):
        res = det_log_verify(2, 2, _mc(400_000, 23))
        assert res.mean_closed_form == pytest.approx(1.0 - 2 * EULER, abs=1e-12)
        assert res.var_closed_form == pytest.approx(math.pi ** 2 / 3 - 1.0, abs=1e-12)
        assert res.mean_agrees() and res.var_agrees()

    def test_1x4_digamma_mean(self):
        res = det_log_verify(1, 4, _mc(400_000, 24))
        expect = -EULER + 1.0 + 0.5 + 1.0 / 3.0
        assert res.mean_closed_form == pytest.approx(expect, abs=1e-12)
        assert res.mean.mean == pytest.approx(expect, abs=4 * res.mean.std_err)

    def test_construction_matches_matrices(self):
        res = det_log_verify(2, 3, _mc(400_000, 25))
        assert res.cdf_distance < 0.005 * math.sqrt(1_000_000 / 400_000)


class TestLogChi2:
    @pytest.mark.parametrize("n", [2, 10, 100, 10_000])
    def test_density_normalization(self, n):
        from scipy.integrate import quad

        mass, _ = quad(lambda y: float(log_chi2_pdf(n, y)), -80, 40, limit=400)
        assert mass == pytest.approx(1.0, abs=1e-8)

    def test_tv_error_at_1e4(self):
        tv, y_peak, mag = log_chi2_tv_error(10_000)
        assert tv == pytest.approx(0.003761, rel=0.05)
        assert abs(y_peak) == pytest.approx(math.sqrt(3.0), abs=0.1)
        assert mag == pytest.approx(0.1 / math.sqrt(10_000), rel=0.2)

    def test_tv_error_at_100(self):
        tv, _, _ = log_chi2_tv_error(100)
        assert tv == pytest.approx(0.03761, rel=0.10)

    def test_domain(self):
        with pytest.raises(DomainError):
            log_chi2_tv_error(1)


class TestKernelBackends:
    def test_backends_agree(self):
        from icfading._kernels import get_backends

        backends = get_backends()
        if len(backends) < 2:
            pytest.skip("compiled backend unavailable")
        rng = np.random.default_rng(2)
        x = rng.uniform(-500, 500, 50_000)
        h = np.sqrt(rng.gamma(0.6, 1.0 / 0.6, 50_000))
        z = rng.normal(0.0, 1.0, 50_000)
        results = {
            name: mod.scalar_info_density(x, h, z, 1000.0, 1.0)
            for name, mod in backends.items()
        }
        vals = list(results.values())
        np.testing.assert_allclose(vals[0][0], vals[1][0], rtol=1e-12, atol=1e-12)
        assert vals[0][1] == vals[1][1]

    def test_log_q_diff_never_silent_zero(self):
        from icfading._kernels import get_backends

        for name, mod in get_backends().items():
            vals, guarded = mod.log_q_diff(np.array([50.0]), np.array([51.0]))
            assert np.isfinite(vals[0]) and vals[0] < -708.0
            assert bool(np.asarray(guarded)[0]) or int(np.asarray(guarded)[0]) == 1
