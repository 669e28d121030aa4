"""Tests for the norm-constrained target solver and the ambient ridge
baseline, with KKT stationarity as the oracle for active constraints."""

import numpy as np
import pytest

from replearn.estimators import baseline_target_ridge, fit_target_constrained


def kkt_residual(A, y, w, r):
    """Stationarity of the norm-constrained least squares at w: there must be
    mu >= 0 with A^T(Aw - y) + mu w = 0 and mu (||w|| - r) = 0."""
    g = A.T @ (A @ w - y)
    nrm = np.linalg.norm(w)
    if nrm < r * (1 - 1e-9):
        return float(np.linalg.norm(g))
    mu = -float(g @ w) / float(w @ w)
    return float(np.linalg.norm(g + max(mu, 0.0) * w))


class TestFitTargetConstrained:
    def test_inactive_constraint_returned_unchanged(self):
        rng = np.random.default_rng(0)
        X = rng.standard_normal((20, 4))
        B = np.eye(4)
        y = rng.standard_normal(20)
        free, *_ = np.linalg.lstsq(X, y, rcond=None)
        w = fit_target_constrained(B, X, y, np.linalg.norm(free) * 2)
        np.testing.assert_array_equal(w, free)

    def test_zero_budget(self):
        rng = np.random.default_rng(1)
        X = rng.standard_normal((10, 3))
        w = fit_target_constrained(np.eye(3), X, rng.standard_normal(10), 0.0)
        assert np.all(w == 0)

    def test_negative_budget_rejected(self):
        with pytest.raises(ValueError):
            fit_target_constrained(np.eye(2), np.eye(2), np.ones(2), -1.0)

    def test_active_constraint_tall(self):
        rng = np.random.default_rng(2)
        X = rng.standard_normal((30, 5))
        B = rng.standard_normal((5, 3))
        y = rng.standard_normal(30) * 5
        r = 0.1
        w = fit_target_constrained(B, X, y, r)
        assert abs(np.linalg.norm(w) - r) <= 1e-8 * r
        assert kkt_residual(X @ B, y, w, r) <= 1e-6

    def test_active_constraint_wide(self):
        """Underdetermined side: more head coordinates than samples."""
        rng = np.random.default_rng(3)
        X = rng.standard_normal((6, 10))
        B = rng.standard_normal((10, 8))
        y = rng.standard_normal(6) * 3
        r = 0.05
        w = fit_target_constrained(B, X, y, r)
        assert abs(np.linalg.norm(w) - r) <= 1e-8 * r
        assert kkt_residual(X @ B, y, w, r) <= 1e-6

    def test_budget_never_exceeded(self):
        rng = np.random.default_rng(4)
        for _ in range(30):
            n = int(rng.integers(3, 15))
            m = int(rng.integers(1, 8))
            A = rng.standard_normal((n, m))
            y = rng.standard_normal(n)
            r = float(np.exp(rng.uniform(-4, 2)))
            w = fit_target_constrained(np.eye(m), A, y, r)
            assert np.linalg.norm(w) <= r * (1 + 1e-8)


class TestBaselineTargetRidge:
    def test_infinite_budget_is_ols(self):
        rng = np.random.default_rng(5)
        X = rng.standard_normal((25, 6))
        y = rng.standard_normal(25)
        oracle = np.linalg.solve(X.T @ X, X.T @ y)
        np.testing.assert_allclose(baseline_target_ridge(X, y, np.inf), oracle, atol=1e-8)

    def test_zero_budget(self):
        rng = np.random.default_rng(6)
        X = rng.standard_normal((10, 4))
        assert np.all(baseline_target_ridge(X, rng.standard_normal(10), 0.0) == 0)

    def test_oracle_norm_budget_kkt(self):
        rng = np.random.default_rng(7)
        X = rng.standard_normal((15, 8))
        theta_star = rng.standard_normal(8)
        theta_star /= np.linalg.norm(theta_star)
        y = X @ theta_star * 4 + rng.standard_normal(15)
        r = float(np.linalg.norm(theta_star))
        w = baseline_target_ridge(X, y, r)
        assert abs(np.linalg.norm(w) - r) <= 1e-8 * r
        assert kkt_residual(X, y, w, r) <= 1e-6
