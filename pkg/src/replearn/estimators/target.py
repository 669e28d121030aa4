"""Target-side fitting: least squares with an optional Euclidean norm budget.

The constrained problem  min_{||w|| <= r} (1/2n)||A w - y||^2  is solved
exactly: if the minimum-norm unconstrained solution fits the budget it is
returned unchanged, otherwise the Lagrange multiplier mu in

    w(mu) = (A^T A + mu I)^{-1} A^T y

is bisected until ||w(mu)|| = r.  ||w(mu)|| is strictly decreasing in mu, and
the resolvent identity lets us work on whichever Gram side of A is smaller.
"""

from __future__ import annotations

import numpy as np

__all__ = ["fit_target_linear", "fit_target_constrained", "baseline_target_ridge"]

BISECT_MAX_ITER = 200
BISECT_REL_TOL = 1e-10
_RANK_CUTOFF = 1e-12


def fit_target_linear(B_hat: np.ndarray, X_target: np.ndarray, y_target: np.ndarray) -> np.ndarray:
    """Minimum-norm least squares of the target labels on ``X @ B_hat``."""
    A = np.asarray(X_target, dtype=float) @ np.asarray(B_hat, dtype=float)
    w, *_ = np.linalg.lstsq(A, np.asarray(y_target, dtype=float), rcond=None)
    return w


def _norm_profile(A, y):
    """Spectral data for evaluating ||w(mu)|| cheaply on the smaller Gram side."""
    n, m = A.shape
    if m <= n:
        s, Q = np.linalg.eigh(A.T @ A)
        coef = Q.T @ (A.T @ y)
        weights = np.ones_like(s)
    else:
        s, P = np.linalg.eigh(A @ A.T)
        coef = P.T @ y
        weights = s.copy()
    s = np.maximum(s, 0.0)
    cutoff = (s[-1] if s.size else 0.0) * max(A.shape) * _RANK_CUTOFF
    keep = s > cutoff
    # Components in the numerical null space are round-off, not signal.
    return s[keep], coef[keep], weights[keep]


def _norm_at(mu, s, coef, weights):
    if s.size == 0:
        return 0.0
    return float(np.sqrt(np.sum(weights * (coef / (s + mu)) ** 2)))


def fit_target_constrained(B_hat, X_target, y_target, r: float) -> np.ndarray:
    """Solve ``min_{||w|| <= r} (1/2 n2)||X B_hat w - y||^2``."""
    A = np.asarray(X_target, dtype=float) @ np.asarray(B_hat, dtype=float)
    return _constrained_lstsq(A, np.asarray(y_target, dtype=float), r)


def _constrained_lstsq(A, y, r):
    if r < 0:
        raise ValueError("norm budget r must be nonnegative")
    m = A.shape[1]
    if r == 0:
        return np.zeros(m)

    w0, *_ = np.linalg.lstsq(A, y, rcond=None)
    if not np.isfinite(r) or np.linalg.norm(w0) <= r:
        return w0

    s, coef, weights = _norm_profile(A, y)
    lo, hi = 0.0, float(np.linalg.norm(A.T @ y) / r)
    for _ in range(BISECT_MAX_ITER):
        mu = (lo + hi) / 2.0
        nrm = _norm_at(mu, s, coef, weights)
        if abs(nrm - r) <= BISECT_REL_TOL * r:
            break
        if nrm > r:
            lo = mu
        else:
            hi = mu
    mu = (lo + hi) / 2.0
    n, m = A.shape
    if m <= n:
        return np.linalg.solve(A.T @ A + mu * np.eye(m), A.T @ y)
    return A.T @ np.linalg.solve(A @ A.T + mu * np.eye(n), y)


def baseline_target_ridge(X_target, y_target, norm_budget: float) -> np.ndarray:
    """Norm-constrained least squares directly in ambient space (no representation).

    ``norm_budget = inf`` degrades to the minimum-norm OLS solution.
    """
    return _constrained_lstsq(
        np.asarray(X_target, dtype=float), np.asarray(y_target, dtype=float), norm_budget
    )
