import numpy as np
import pytest

from reconstruct.errors import DimensionMismatch, NotPositiveDefinite
from reconstruct.numerics import (
    BandedSpdMatrix,
    TraceEstimate,
    banded_inverse_diagonal,
    banded_spd_solve,
    fdp_hat_trace,
    fdp_system,
    hat_trace,
    second_difference_gram,
    spd_factor,
    spd_solve,
)

from conftest import random_spd


def second_difference_dense(n):
    M = np.zeros((n - 2, n))
    for i in range(n - 2):
        M[i, i : i + 3] = (1.0, -2.0, 1.0)
    return M


class TestSpdSolve:
    def test_hand_elimination(self):
        x = spd_solve(np.array([[2.0, 1.0], [1.0, 2.0]]), np.array([3.0, 3.0]))
        np.testing.assert_allclose(x, [1.0, 1.0], atol=1e-12)

    def test_identity(self, rng):
        y = rng.normal(size=7)
        np.testing.assert_allclose(spd_solve(np.eye(7), y), y, atol=1e-14)

    def test_inverse_column(self, rng):
        A = random_spd(rng, 8)
        e1 = np.zeros(8)
        e1[0] = 1.0
        x = spd_solve(A, e1)
        assert np.linalg.norm(A @ x - e1) / np.linalg.norm(e1) < 1e-10
        np.testing.assert_allclose(x, np.linalg.inv(A)[:, 0], rtol=1e-8)

    @pytest.mark.parametrize("n", [3, 10, 25])
    def test_multiply_back(self, rng, n):
        A = random_spd(rng, n)
        rhs = rng.normal(size=(n, 2))
        X = spd_solve(A, rhs)
        assert np.linalg.norm(A @ X - rhs) / np.linalg.norm(rhs) < 1e-8

    def test_jitter_reported(self):
        # an exactly singular PSD matrix needs a nugget to factor
        A = np.ones((6, 6))
        x, jitter = spd_solve(A, np.ones(6), return_jitter=True)
        assert jitter > 0.0

    def test_not_positive_definite(self):
        with pytest.raises(NotPositiveDefinite):
            spd_solve(np.array([[1.0, 2.0], [2.0, 1.0]]), np.array([1.0, 1.0]))

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            spd_solve(np.eye(3), np.ones(4))
        with pytest.raises(DimensionMismatch):
            spd_solve(np.ones((2, 3)), np.ones(2))

    def test_factor_reproduces_input(self, rng):
        A = random_spd(rng, 12)
        fac = spd_factor(A)
        recon = fac.factor @ fac.factor.T - fac.jitter_applied * np.eye(12)
        assert np.max(np.abs(recon - A)) / np.max(np.abs(A)) < 1e-10


class TestBandedSolve:
    def test_identity(self, rng):
        y = rng.normal(size=9)
        M = BandedSpdMatrix(dimension=9, bandwidth=0, ab=np.ones((1, 9)))
        np.testing.assert_allclose(banded_spd_solve(M, y), y, atol=1e-14)

    def test_lambda_zero_passthrough(self, rng):
        y = rng.normal(size=5)
        np.testing.assert_allclose(banded_spd_solve(fdp_system(5, 0.0), y), y,
                                   atol=1e-14)

    @pytest.mark.parametrize("n,lam", [(5, 0.3), (50, 0.01), (200, 0.1), (500, 2.0)])
    def test_matches_dense(self, rng, n, lam):
        y = rng.normal(size=n)
        M = second_difference_dense(n)
        dense = np.eye(n) + n * lam * M.T @ M
        banded = banded_spd_solve(fdp_system(n, lam), y)
        ref = spd_solve(dense, y)
        assert np.max(np.abs(banded - ref)) <= 1e-10 * max(1.0, np.max(np.abs(ref)))

    @pytest.mark.parametrize("n", [3, 4, 5, 8, 30])
    def test_gram_assembly(self, n):
        M = second_difference_dense(n)
        np.testing.assert_allclose(second_difference_gram(n).dense(), M.T @ M,
                                   atol=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            banded_spd_solve(fdp_system(6, 0.1), np.ones(5))


class TestInverseDiagonal:
    @pytest.mark.parametrize("n,lam", [(10, 0.5), (50, 0.07), (200, 0.07)])
    def test_matches_dense_inverse(self, n, lam):
        M = second_difference_dense(n)
        dense = np.eye(n) + n * lam * M.T @ M
        diag = banded_inverse_diagonal(fdp_system(n, lam))
        np.testing.assert_allclose(diag, np.diag(np.linalg.inv(dense)), atol=1e-10)


class TestHatTrace:
    def test_identity_case_closed_form(self, rng):
        n = 17
        for lam in (0.0, 1e-3, 0.5, 10.0):
            got = hat_trace(np.eye(n), np.eye(n), lam)
            assert abs(got - n / (1.0 + n * lam)) < 1e-12 * n

    def test_lambda_zero_square_b(self, rng):
        n = 12
        B = rng.normal(size=(n, n)) + np.eye(n) * 3
        Sigma = random_spd(rng, n)
        assert abs(hat_trace(B, Sigma, 0.0) - n) < 1e-8

    def test_matches_explicit_hat_matrix(self, rng):
        n, m = 40, 6
        B = rng.normal(size=(n, m))
        Sigma = random_spd(rng, m)
        lam = 0.05
        H = B @ np.linalg.solve(B.T @ B + n * lam * Sigma, B.T)
        assert abs(hat_trace(B, Sigma, lam) - np.trace(H)) < 1e-8

    def test_fdp_case_matches_dense(self):
        n, lam = 50, 0.02
        M = second_difference_dense(n)
        H = np.linalg.inv(np.eye(n) + n * lam * M.T @ M)
        got = fdp_hat_trace(n, lam)
        assert abs(got - np.trace(H)) / np.trace(H) < 1e-8
        assert got.stochastic is False
        # the same quantity through the dense op surface
        got_dense = hat_trace(np.eye(n), M.T @ M, lam)
        assert abs(got_dense - np.trace(H)) / np.trace(H) < 1e-8

    def test_fdp_stochastic_path(self):
        n, lam = 400, 0.05
        exact = fdp_hat_trace(n, lam)
        est = fdp_hat_trace(n, lam, exact_limit=100)
        assert est.stochastic and est.n_probes == 64
        assert isinstance(est, TraceEstimate) and isinstance(est, float)
        assert abs(est - exact) / exact < 0.05
        # fixed seed: bit-identical rerun
        assert fdp_hat_trace(n, lam, exact_limit=100) == est
