"""Deterministic dense linear-algebra kernel.

Projections, pseudoinverse-backed ridge solves, singular-value thresholding,
Loewner-order tests and balanced factor splits.  Everything here is a pure
function of its inputs; only deterministic LAPACK eigen/SVD routines are
used so repeated calls are bit-identical on a given platform.

Singular values below ``max(rows, cols) * sigma_max * 1e-12`` are treated as
zero when computing numerical ranks and pseudoinverses.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "PsdCheckResult",
    "projector",
    "complement_projector",
    "orthonormal_basis",
    "ridge_solve",
    "resolvent_commute_gap",
    "svt",
    "loewner_geq",
    "factor_split",
    "nuclear_norm",
]

RANK_CUTOFF_FACTOR = 1e-12
SYMMETRY_TOL = 1e-10


@dataclass(frozen=True)
class PsdCheckResult:
    """Verdict of a positive-semidefiniteness test."""

    is_psd: bool
    min_eigenvalue: float
    tolerance_used: float


def _validate_matrix(A, name="matrix"):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} contains non-finite entries")
    return A


def _rank_cutoff(s, shape):
    if s.size == 0:
        return 0.0
    return max(shape) * s[0] * RANK_CUTOFF_FACTOR


def orthonormal_basis(A: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the column space of ``A`` (thin SVD, rank cutoff)."""
    A = _validate_matrix(A, "A")
    if A.shape[1] == 0:
        return np.zeros((A.shape[0], 0))
    U, s, _ = np.linalg.svd(A, full_matrices=False)
    r = int(np.sum(s > _rank_cutoff(s, A.shape)))
    return U[:, :r]


def projector(A: np.ndarray) -> np.ndarray:
    """Orthogonal projection onto the column space of ``A``.

    Computed as ``U U^T`` from a thin SVD rather than forming
    ``A (A^T A)^+ A^T`` directly, which keeps the result symmetric and
    idempotent to working precision even for ill-conditioned inputs.
    """
    A = _validate_matrix(A, "A")
    if A.shape[0] < 1:
        raise ValueError("A must have at least one row")
    U = orthonormal_basis(A)
    P = U @ U.T
    return (P + P.T) / 2.0


def complement_projector(A: np.ndarray) -> np.ndarray:
    """Projection onto the orthogonal complement of the column space of ``A``."""
    P = projector(A)
    return np.eye(P.shape[0]) - P


def ridge_solve(X: np.ndarray, y: np.ndarray, lam: float) -> np.ndarray:
    """Minimizer of ``(1/2n)||Xw - y||^2 + (lam/2)||w||^2``.

    For ``lam == 0`` this is ordinary least squares via the normal equations
    and the Gram matrix must be numerically invertible.
    """
    X = _validate_matrix(X, "X")
    y = np.asarray(y, dtype=float).ravel()
    n, d = X.shape
    if n < 1:
        raise ValueError("X must have at least one row")
    if y.shape[0] != n:
        raise ValueError(f"y has length {y.shape[0]}, expected {n}")
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    G = X.T @ X / n
    b = X.T @ y / n
    if lam == 0.0:
        cond = np.linalg.cond(G)
        if not cond < 1e12:
            raise np.linalg.LinAlgError(
                f"X is numerically rank-deficient for lam=0: "
                f"condition number of X^T X / n is {cond:.3e} >= 1e12"
            )
        return np.linalg.solve(G, b)
    return np.linalg.solve(G + lam * np.eye(d), b)


def resolvent_commute_gap(X: np.ndarray, lam: float) -> float:
    """Max-entry gap between ``(X^T X + lam I)^{-1} X^T`` and ``X^T (X X^T + lam I)^{-1}``.

    The two expressions agree exactly in real arithmetic, so the gap measures
    floating-point error only.
    """
    X = _validate_matrix(X, "X")
    if lam <= 0:
        raise ValueError("lam must be positive")
    n, d = X.shape
    left = np.linalg.solve(X.T @ X + lam * np.eye(d), X.T)
    right = np.linalg.solve(X @ X.T + lam * np.eye(n), X).T
    if left.size == 0:
        return 0.0
    return float(np.max(np.abs(left - right)))


def svt(M: np.ndarray, tau: float) -> np.ndarray:
    """Singular-value thresholding, the prox of ``tau * ||.||_*``."""
    M = _validate_matrix(M, "M")
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    if tau == 0.0:
        return M.copy()
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    s = np.maximum(s - tau, 0.0)
    return (U * s) @ Vt


def loewner_geq(A: np.ndarray, B: np.ndarray, tol: float = 1e-9) -> PsdCheckResult:
    """Test ``A >= B`` in the Loewner order.

    Inputs must be symmetric to 1e-10; they are symmetrized as
    ``(M + M^T)/2`` before the eigendecomposition.
    """
    A = _validate_matrix(A, "A")
    B = _validate_matrix(B, "B")
    if A.shape != B.shape or A.shape[0] != A.shape[1]:
        raise ValueError(f"A and B must be square and same shape, got {A.shape} vs {B.shape}")
    for M, name in ((A, "A"), (B, "B")):
        scale = max(1.0, float(np.max(np.abs(M))) if M.size else 1.0)
        if np.max(np.abs(M - M.T)) > SYMMETRY_TOL * scale:
            raise ValueError(f"{name} is not symmetric to {SYMMETRY_TOL}")
    D = (A - B + (A - B).T) / 2.0
    min_eig = float(np.linalg.eigvalsh(D)[0]) if D.size else 0.0
    return PsdCheckResult(is_psd=min_eig >= -tol, min_eigenvalue=min_eig, tolerance_used=tol)


def factor_split(Theta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Balanced factorization ``Theta = B @ W`` with ``||B||_F^2 = ||W||_F^2 = ||Theta||_*``.

    ``B = U sqrt(S)`` and ``W = sqrt(S) V^T`` from the SVD; this is the
    factor pair at which the variational form
    ``||Theta||_* = min (||B||_F^2 + ||W||_F^2) / 2`` is attained.
    """
    Theta = _validate_matrix(Theta, "Theta")
    U, s, Vt = np.linalg.svd(Theta, full_matrices=False)
    root = np.sqrt(s)
    return U * root, root[:, None] * Vt


def nuclear_norm(M: np.ndarray) -> float:
    """Sum of singular values."""
    M = _validate_matrix(M, "M")
    if min(M.shape) == 0:
        return 0.0
    return float(np.sum(np.linalg.svd(M, compute_uv=False)))
