import time
import tracemalloc

import numpy as np
import pytest

from reconstruct.baselines import (
    VarianceParams,
    estimate_variances,
    fit_empirical_bayes,
    fit_gpr,
    fit_nystrom,
    fit_spgp,
)
from reconstruct.errors import DegenerateData
from reconstruct.estimators import fit_gprr, fit_krr, predict
from reconstruct.interpolators import KnotSet
from reconstruct.kernels import default_gaussian, gaussian_kernel

from conftest import separated_points


class TestGpr:
    def test_constant_absorbed_by_trend(self, rng):
        X = rng.random((25, 2))
        y = np.full(25, 3.3)
        for lam in (1e-3, 0.1, 10.0):
            model = fit_gpr(X, y, default_gaussian(2), "constant", lam)
            xs = rng.random((30, 2))
            np.testing.assert_allclose(predict(model, xs), 3.3, atol=1e-7)

    def test_interpolates_at_zero(self, rng):
        X = separated_points(rng, 20, 2)
        y = rng.normal(size=20)
        model = fit_gpr(X, y, default_gaussian(2), "constant+linear", 0.0)
        assert np.max(np.abs(predict(model, X) - y)) <= 1e-8 * (1 + np.max(np.abs(y)))

    def test_none_equals_krr(self, rng):
        X = rng.random((30, 2))
        y = rng.normal(size=30)
        spec = default_gaussian(2)
        xs = rng.random((40, 2))
        a = predict(fit_gpr(X, y, spec, "none", 0.05), xs)
        b = predict(fit_krr(X, y, spec, 0.05), xs)
        np.testing.assert_allclose(a, b, atol=1e-8 * (1 + np.max(np.abs(b))))

    def test_gcv_policy_selects_from_grid(self, rng):
        X = rng.random((40, 2))
        y = X[:, 0] + rng.normal(size=40) * 0.2
        model = fit_gpr(X, y, default_gaussian(2), "constant+linear", "gcv")
        assert model.lam > 0 and model.diagnostics.gcv is not None


class TestNystrom:
    def test_full_knots_equal_gpr(self, rng):
        X = rng.random((60, 2))
        y = np.sin(3 * X[:, 0]) + rng.normal(size=60) * 0.3
        spec = default_gaussian(2)
        xs = rng.random((50, 2))
        for lam in (1e-2, 0.5):
            a = predict(fit_nystrom(X, y, X, spec, "constant+linear", lam), xs)
            b = predict(fit_gpr(X, y, spec, "constant+linear", lam), xs)
            np.testing.assert_allclose(a, b, atol=1e-8 * (1 + np.max(np.abs(b))))

    def test_full_knots_equal_gpr_with_gcv(self, rng):
        X = rng.random((50, 2))
        y = np.sin(4 * X[:, 1]) + rng.normal(size=50) * 0.3
        spec = default_gaussian(2)
        xs = rng.random((30, 2))
        a = fit_nystrom(X, y, X, spec, "constant+linear", "gcv")
        b = fit_gpr(X, y, spec, "constant+linear", "gcv")
        assert a.lam == pytest.approx(b.lam)
        np.testing.assert_allclose(
            predict(a, xs), predict(b, xs),
            atol=1e-6 * (1 + np.max(np.abs(predict(b, xs)))),
        )

    def test_gamma_hat_consistent(self, rng):
        X = rng.random((40, 2))
        y = rng.normal(size=40)
        A = separated_points(rng, 8, 2)
        model = fit_nystrom(X, y, A, default_gaussian(2), "constant+linear", 0.05)
        np.testing.assert_allclose(
            predict(model, X), model.gamma_hat,
            atol=1e-8 * (1 + np.max(np.abs(model.gamma_hat))),
        )

    def test_linear_in_y(self, rng):
        X = rng.random((50, 2))
        A = separated_points(rng, 6, 2)
        spec = default_gaussian(2)
        xs = rng.random((20, 2))
        y1, y2 = rng.normal(size=50), rng.normal(size=50)
        f = lambda y: predict(fit_nystrom(X, y, A, spec, "constant", 0.03), xs)
        np.testing.assert_allclose(
            f(y1 + y2), f(y1) + f(y2),
            atol=1e-8 * (1 + np.max(np.abs(f(y1) + f(y2)))),
        )

    def test_cost_scales_linearly_in_n(self, rng):
        spec = gaussian_kernel(np.full(4, 1.0))
        times = {}
        for n in (4000, 16000):
            X = rng.random((n, 4))
            y = rng.normal(size=n)
            A = X[:40]
            fit_nystrom(X, y, KnotSet(A), spec, "constant+linear", 1e-3)  # warm
            samples = []
            for _ in range(3):
                t0 = time.perf_counter()
                fit_nystrom(X, y, KnotSet(A), spec, "constant+linear", 1e-3)
                samples.append(time.perf_counter() - t0)
            times[n] = min(samples)
        # an n^3 path would scale 64x here; the low-rank path is ~linear
        assert times[16000] / times[4000] < 16.0

    def test_cost_scales_in_m(self, rng):
        n = 30000
        X = rng.random((n, 4))
        y = rng.normal(size=n)
        spec = gaussian_kernel(np.full(4, 1.0))
        times = {}
        for m in (20, 40):
            A = KnotSet(X[:m])
            fit_nystrom(X, y, A, spec, "constant+linear", 1e-3)
            samples = []
            for _ in range(3):
                t0 = time.perf_counter()
                fit_nystrom(X, y, A, spec, "constant+linear", 1e-3)
                samples.append(time.perf_counter() - t0)
            times[m] = min(samples)
        # between linear (2x) and quadratic (4x) growth, with slack
        assert 1.2 < times[40] / times[20] < 6.0


class TestSpgp:
    def test_full_knots_equal_krr_at_matched_lambda(self, rng):
        n = 30
        X = rng.random((n, 2))
        y = rng.normal(size=n)
        spec = default_gaussian(2)
        vp = VarianceParams(tau2=2.0, sigma2=0.5)
        xs = rng.random((40, 2))
        a = predict(fit_spgp(X, y, X, spec, vp), xs)
        b = predict(fit_krr(X, y, spec, vp.sigma2 / (n * vp.tau2)), xs)
        np.testing.assert_allclose(a, b, atol=1e-8 * (1 + np.max(np.abs(b))))

    def test_shrinkage_grows_as_signal_variance_drops(self, rng):
        X = rng.random((50, 2))
        y = rng.normal(size=50)
        A = separated_points(rng, 8, 2)
        spec = default_gaussian(2)
        norms = [
            np.linalg.norm(fit_spgp(X, y, A, spec, VarianceParams(t2, 1.0)).gamma_hat)
            for t2 in (10.0, 1.0, 0.1, 0.01)
        ]
        assert all(a >= b for a, b in zip(norms, norms[1:]))

    def test_zero_response(self, rng):
        X = rng.random((30, 2))
        A = separated_points(rng, 6, 2)
        model = fit_spgp(X, np.zeros(30), A, default_gaussian(2),
                         VarianceParams(1.0, 1.0))
        np.testing.assert_allclose(model.gamma_hat, 0.0, atol=1e-12)


class TestEmpiricalBayes:
    def test_equals_gprr_with_matched_penalty(self, rng):
        n = 40
        X = rng.random((n, 2))
        y = np.sin(5 * X[:, 0]) + rng.normal(size=n) * 0.2
        A = separated_points(rng, 9, 2)
        spec = default_gaussian(2)
        vp = VarianceParams(tau2=1.5, sigma2=0.3)
        xs = rng.random((50, 2))
        a = predict(fit_empirical_bayes(X, y, A, spec, vp), xs)
        b = predict(
            fit_gprr(X, y, A, spec, "none", vp.sigma2 / (n * vp.tau2)), xs
        )
        np.testing.assert_allclose(a, b, atol=1e-8 * (1 + np.max(np.abs(b))))

    def test_small_noise_interpolates_at_full_knots(self, rng):
        X = separated_points(rng, 25, 2)
        y = rng.normal(size=25)
        model = fit_empirical_bayes(X, y, X, default_gaussian(2),
                                    VarianceParams(1.0, 1e-10))
        assert np.max(np.abs(predict(model, X) - y)) <= 1e-6 * (1 + np.max(np.abs(y)))

    def test_equals_spgp_when_correction_vanishes(self, rng):
        X = rng.random((30, 2))
        y = rng.normal(size=30)
        spec = default_gaussian(2)
        vp = VarianceParams(2.0, 0.7)
        xs = rng.random((20, 2))
        a = predict(fit_empirical_bayes(X, y, X, spec, vp), xs)
        b = predict(fit_spgp(X, y, X, spec, vp), xs)
        np.testing.assert_allclose(a, b, atol=1e-8 * (1 + np.max(np.abs(b))))


class TestEstimateVariances:
    def test_pure_noise_recovers_sigma(self):
        hits = 0
        for s in range(100):
            r = np.random.default_rng(9000 + s)
            X = r.random((150, 2))
            y = r.normal(size=150) * 0.7
            A = X[:5]
            vp = estimate_variances(X, y, KnotSet(A), default_gaussian(2))
            if 0.49 / 3 <= vp.sigma2 <= 0.49 * 3:
                hits += 1
        assert hits >= 80

    def test_noiseless_smooth_response_hits_floor(self, rng):
        X = rng.random((120, 1))
        y = np.sin(2 * X[:, 0])
        A = separated_points(rng, 10, 1)
        vp = estimate_variances(X, y, KnotSet(A), default_gaussian(1))
        grid_floor = 1e-4 * np.var(y)
        assert vp.sigma2 == pytest.approx(grid_floor, rel=1e-9)

    def test_scale_equivariance_within_grid_step(self, rng):
        X = rng.random((100, 2))
        y = np.sin(4 * X[:, 0]) + 0.3 * rng.normal(size=100)
        A = separated_points(rng, 8, 2)
        spec = default_gaussian(2)
        v1 = estimate_variances(X, y, KnotSet(A), spec)
        v2 = estimate_variances(X, 10.0 * y, KnotSet(A), spec)
        step = 10 ** (8.0 / 19.0)  # one log-grid step
        assert 100.0 / step <= v2.tau2 / v1.tau2 <= 100.0 * step
        assert 100.0 / step <= v2.sigma2 / v1.sigma2 <= 100.0 * step

    def test_degenerate_data(self, rng):
        X = rng.random((20, 1))
        with pytest.raises(DegenerateData):
            estimate_variances(X, np.ones(20), KnotSet(X[:3]), default_gaussian(1))


class TestLowRankMemory:
    def test_no_dense_n_by_n_allocation(self, rng):
        n, m = 100_000, 40
        X = rng.random((n, 2))
        y = rng.normal(size=n)
        A = KnotSet(X[:m])
        spec = default_gaussian(2)
        tracemalloc.start()
        fit_nystrom(X, y, A, spec, "constant+linear", 1e-3)
        fit_spgp(X, y, A, spec, VarianceParams(1.0, 0.5))
        _, peak = tracemalloc.get_traced_memory()
        tracemalloc.stop()
        # an n x n double array alone would be 80 GB
        assert peak < 2e9


class TestBaselineLinearity:
    def test_spgp_and_eb_superposition(self, rng):
        X = rng.random((40, 2))
        A = separated_points(rng, 7, 2)
        spec = default_gaussian(2)
        vp = VarianceParams(1.0, 0.4)
        xs = rng.random((15, 2))
        y1, y2 = rng.normal(size=40), rng.normal(size=40)
        for fitter in (fit_spgp, fit_empirical_bayes):
            f = lambda y: predict(fitter(X, y, A, spec, vp), xs)
            lhs, rhs = f(y1 + y2), f(y1) + f(y2)
            np.testing.assert_allclose(
                lhs, rhs, atol=1e-8 * (1 + np.max(np.abs(rhs)))
            )
