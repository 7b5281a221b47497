import numpy as np
import pytest

from conftest import random_vector
from fredholm.errors import KappaOutOfRange, ResidualCheckFailed
from fredholm.neumann import NeumannPlan, apply_inverse, neumann_block, terms_needed
from fredholm.operators import CoeffVector, FiniteMatrix, euclidean, grid


class TestTermsNeeded:
    @pytest.mark.parametrize("kappa,eps,J", [(0.0, 1e-6, 0), (0.5, 1e-6, 20), (0.9, 1e-3, 87)])
    def test_known(self, kappa, eps, J):
        assert terms_needed(kappa, eps) == J

    @pytest.mark.parametrize("kappa", [0.01, 0.25, 0.5, 0.75, 0.9, 0.99])
    @pytest.mark.parametrize("eps", [1e-3, 1e-8, 1e-14])
    def test_minimal(self, kappa, eps):
        J = terms_needed(kappa, eps)
        assert kappa ** (J + 1) / (1 - kappa) <= eps
        if J > 0:
            assert kappa**J / (1 - kappa) > eps

    @pytest.mark.parametrize("kappa", [-0.1, 1.0, 1.5])
    def test_kappa_range(self, kappa):
        with pytest.raises(KappaOutOfRange):
            terms_needed(kappa, 1e-6)

    def test_plan(self):
        plan = NeumannPlan.make(0.5, 1e-6)
        assert plan.J == 20
        assert plan.remainder_bound() <= 1e-6


class TestSeries:
    def test_zero_operator(self, rng):
        b = grid(5)
        y = random_vector(rng, b)
        K = FiniteMatrix(np.zeros((5, 5)), b)
        assert np.array_equal(apply_inverse(K, 0.0, y, 1e-10).coeffs, y.coeffs)

    @pytest.mark.parametrize("kappa", [0.25, 0.5, 0.9])
    def test_diagonal_against_exact_inverse(self, rng, kappa):
        d = kappa * rng.uniform(-1, 1, 12)
        d[0] = kappa
        K = FiniteMatrix(np.diag(d))
        for _ in range(10):
            y = random_vector(rng, euclidean(12))
            z = apply_inverse(K, kappa, y, 1e-9)
            exact = y.coeffs / (1 - d)
            assert np.linalg.norm(z.coeffs - exact) <= 1e-9 * y.norm() / (1 - kappa)

    def test_block_matches_columns(self, rng):
        A = rng.standard_normal((6, 6))
        A *= 0.5 / np.linalg.norm(A, 2)
        K = FiniteMatrix(A)
        Y = rng.standard_normal((6, 3))
        Z, used = neumann_block(K, 0.5, Y, euclidean(6), 1e-12)
        assert np.allclose(Z, np.linalg.solve(np.eye(6) - A, Y), atol=1e-11)
        assert used <= terms_needed(0.5, 1e-12)

    def test_early_exit_on_nilpotent(self):
        K = FiniteMatrix(0.5 * np.diag([1.0, 1.0], 1))
        Z, used = neumann_block(K, 0.5, np.ones(3), euclidean(3), 1e-12)
        assert used == 3  # K^3 = 0
        assert np.allclose(Z[:, 0], [1.75, 1.5, 1.0])

    def test_understated_kappa_caught(self):
        # kappa claims 0.1 but ||K|| = 0.95: the residual check must object
        K = FiniteMatrix(0.95 * np.eye(2))
        with pytest.raises(ResidualCheckFailed):
            apply_inverse(K, 0.1, CoeffVector(euclidean(2), [1.0, 0.0]), 1e-6)


class TestWorkedExamples:
    def test_half_identity(self):
        z = apply_inverse(FiniteMatrix(0.5 * np.eye(2)), 0.5, CoeffVector(euclidean(2), [1.0, 1.0]), 1e-8)
        assert np.allclose(z.coeffs, [2, 2], atol=1e-6)

    def test_diag(self):
        z = apply_inverse(FiniteMatrix(np.diag([0.5, 0.25])), 0.5, CoeffVector(euclidean(2), [1.0, 1.0]), 1e-8)
        assert np.allclose(z.coeffs, [2, 4 / 3], atol=1e-6)

    @pytest.mark.parametrize("kappa", [0.3, 0.6, 0.9])
    def test_agrees_with_direct_solve(self, rng, kappa):
        A = rng.standard_normal((8, 8))
        A *= kappa / np.linalg.norm(A, 2)
        y = rng.standard_normal(8)
        eps = 1e-8
        z = apply_inverse(FiniteMatrix(A), kappa, CoeffVector(euclidean(8), y), eps)
        assert np.linalg.norm(z.coeffs - np.linalg.solve(np.eye(8) - A, y)) <= 10 * eps * np.linalg.norm(y)

    def test_remainder_bound_diagonal(self, rng):
        for kappa in (0.25, 0.5, 0.9):
            d = np.full(6, kappa)
            y = rng.standard_normal(6)
            Z, _ = neumann_block(FiniteMatrix(np.diag(d)), kappa, y, euclidean(6), 1e-6)
            J = terms_needed(kappa, 1e-6)
            resid = np.linalg.norm(Z[:, 0] - d * Z[:, 0] - y)
            assert resid <= kappa ** (J + 1) * np.linalg.norm(y) * (1 + 1e-10) / (1 - kappa)

    def test_monotone_in_terms(self, rng):
        A = rng.standard_normal((6, 6))
        A *= 0.8 / np.linalg.norm(A, 2)
        y = rng.standard_normal(6)
        prev = np.inf
        for eps in (1e-2, 1e-4, 1e-8):
            Z, _ = neumann_block(FiniteMatrix(A), 0.8, y, euclidean(6), eps)
            resid = np.linalg.norm(Z[:, 0] - A @ Z[:, 0] - y)
            assert resid <= prev + 1e-12
            prev = resid
