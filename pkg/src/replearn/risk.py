"""Excess-risk evaluation and representation-quality metrics.

Excess risk on the target task is the population squared-loss gap to the
teacher,  ER = (1/2) Delta^T Sigma Delta  with Delta the ambient coefficient
error for linear predictors, or a Monte-Carlo average of the squared
function gap for ReLU networks.  Expected excess risk over the target-task
distribution is estimated by Monte Carlo: each draw samples a coherent
target weight, fresh target data, and re-runs the pipeline's target fit.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import rng, taskgen
from .estimators import (
    FitOptions,
    baseline_scratch_nn,
    fit_target_constrained,
    fit_target_linear,
    fit_relu_target,
    relu_features,
)
from .estimators.target import _constrained_lstsq
from .linops import orthonormal_basis

__all__ = [
    "RiskReport",
    "RepCovariance",
    "excess_risk_linear",
    "expected_excess_risk",
    "subspace_distance",
    "rep_covariance",
    "gaussian_width_mc",
    "linear_class_width",
    "LowdimPipeline",
    "NuclearPipeline",
    "RidgeBaselinePipeline",
    "ReluPipeline",
    "ScratchNNPipeline",
]

NN_RISK_MC_SAMPLES = 20_000


@dataclass(frozen=True)
class RiskReport:
    """Monte-Carlo excess-risk estimate with its diagnostic decomposition."""

    er_mean: float
    er_se: float
    n_draws: int
    rep_term: float
    noise_term: float
    subspace_dist: float


@dataclass(frozen=True)
class RepCovariance:
    """Symmetric 2k x 2k covariance block matrix and k x k divergence."""

    sigma_blocks: np.ndarray
    divergence: np.ndarray


def excess_risk_linear(B_hat, w_hat, B_star, w_star, Sigma) -> float:
    """Exact quadratic-form excess risk of a linear predictor.

    ``B_hat``/``B_star`` may be ``None`` for predictors expressed directly in
    ambient coordinates.
    """
    theta_hat = np.asarray(w_hat, dtype=float) if B_hat is None else np.asarray(B_hat) @ w_hat
    theta_star = np.asarray(w_star, dtype=float) if B_star is None else np.asarray(B_star) @ w_star
    Sigma = np.asarray(Sigma, dtype=float)
    if theta_hat.shape != theta_star.shape or Sigma.shape != (theta_hat.size, theta_hat.size):
        raise ValueError(
            f"dimension mismatch: predictor {theta_hat.shape}, teacher {theta_star.shape}, "
            f"Sigma {Sigma.shape}"
        )
    delta = theta_hat - theta_star
    return max(float(delta @ Sigma @ delta) / 2.0, 0.0)


# ---------------------------------------------------------------------------
# Pipelines: a fitted source-side representation plus its target-fit rule.
# Each pipeline exposes fit_target(X, y, truth, gen) and either an ambient
# coefficient map (linear predictors) or a predict function (ReLU).


@dataclass(frozen=True)
class LowdimPipeline:
    name = "lowdim"
    B_hat: np.ndarray

    def fit_target(self, X, y, truth, gen):
        return fit_target_linear(self.B_hat, X, y)

    def ambient(self, head):
        return self.B_hat @ head


@dataclass(frozen=True)
class NuclearPipeline:
    name = "nuclear"
    B_hat: np.ndarray
    r: float

    def fit_target(self, X, y, truth, gen):
        return fit_target_constrained(self.B_hat, X, y, self.r)

    def ambient(self, head):
        return self.B_hat @ head


@dataclass(frozen=True)
class RidgeBaselinePipeline:
    """Norm-constrained least squares in ambient space; the budget defaults
    to the drawn target's true norm (the oracle baseline)."""

    name = "baseline-ridge"
    budget: float | None = None

    def fit_target(self, X, y, truth, gen):
        budget = float(np.linalg.norm(truth)) if self.budget is None else self.budget
        return _constrained_lstsq(np.asarray(X, dtype=float), np.asarray(y, dtype=float), budget)

    def ambient(self, head):
        return head


@dataclass(frozen=True)
class ReluPipeline:
    name = "relu"
    B_hat: np.ndarray
    r: float

    def fit_target(self, X, y, truth, gen):
        return fit_relu_target(self.B_hat, X, y, self.r)

    def predict(self, head, X):
        return relu_features(X, self.B_hat) @ head


@dataclass(frozen=True)
class ScratchNNPipeline:
    """Trains a fresh weight-decayed network on each draw's target data."""

    name = "baseline-nn-scratch"
    width: int
    lam: float
    opts: FitOptions

    def fit_target(self, X, y, truth, gen):
        opts = replace(self.opts, seed=int(gen.integers(0, 2**63 - 1)))
        fit = baseline_scratch_nn(X, y, self.width, self.lam, opts)
        return (fit.B_hat, fit.W_hat[:, 0])

    def predict(self, head, X):
        B, w = head
        return relu_features(X, B) @ w


def _nu_second_moment_norm(gt):
    """Spectral norm of the target-weight second moment, per track."""
    spec = gt.spec
    if spec.track == "lowdim":
        return 1.0 / spec.k
    if spec.track == "highdim":
        return float(np.linalg.norm(gt.Theta_star, 2)) ** 2 / spec.T
    return float(np.linalg.norm(gt.nn_head, 2)) ** 2 / spec.T


def _teacher_features(gt, X):
    if gt.spec.track == "relu":
        return relu_features(X, gt.nn_hidden)
    return X @ gt.B_star


def _rep_term(pipeline, gt, X_target):
    """Projection-residual surrogate for the representation error component."""
    if not hasattr(pipeline, "B_hat"):
        return 0.0
    n2 = X_target.shape[0]
    if gt.spec.track == "relu":
        learned = relu_features(X_target, pipeline.B_hat)
    else:
        learned = X_target @ pipeline.B_hat
    star = _teacher_features(gt, X_target)
    Q = orthonormal_basis(learned)
    resid = star - Q @ (Q.T @ star)
    return float(np.sum(resid**2)) / n2 * _nu_second_moment_norm(gt)


def _pipeline_subspace_dist(pipeline, gt):
    B_hat = getattr(pipeline, "B_hat", None)
    if B_hat is None:
        B_hat = np.eye(gt.spec.d)
    B_star = gt.nn_hidden if gt.spec.track == "relu" else gt.B_star
    return subspace_distance(B_hat, B_star, gt.Sigma_target)


def _single_draw_er(pipeline, gt, spec, truth, head, gen, mc_samples):
    if spec.track == "relu":
        Xbar = taskgen.whitened_rows(mc_samples, spec.d, spec.input_dist, gen)
        X = Xbar @ taskgen.psd_sqrt(gt.Sigma_target)
        gap = pipeline.predict(head, X) - relu_features(X, gt.nn_hidden) @ truth
        return float(np.mean(gap**2)) / 2.0
    if spec.track == "lowdim":
        theta_star = gt.B_star @ truth
    else:
        theta_star = truth
    return excess_risk_linear(None, pipeline.ambient(head), None, theta_star, gt.Sigma_target)


def expected_excess_risk(pipeline, gt, bundle_fixed_sources, nu_draws: int, seed: int,
                         *, sigma: float | None = None,
                         fixed_target_weight: np.ndarray | None = None,
                         mc_samples: int = NN_RISK_MC_SAMPLES) -> RiskReport:
    """Monte-Carlo expected excess risk over the coherent target distribution.

    The representation is fixed (already fit from source data).  Each draw
    samples a target weight, fresh target data of size ``n2`` with noise
    level ``sigma`` (defaulting to the spec's), runs the pipeline's target
    fit and evaluates the excess risk.  ``fixed_target_weight`` freezes the
    draw entirely (diagnostic point-mass mode).

    Draw ``i`` derives all randomness from ``(seed, i)``, so results are
    independent of evaluation order.
    """
    if nu_draws < 1:
        raise ValueError("nu_draws must be at least 1")
    spec = bundle_fixed_sources.spec
    if sigma is not None:
        spec = replace(spec, sigma=sigma)
    roots = taskgen.psd_sqrt(gt.Sigma_target)

    if fixed_target_weight is not None:
        nu_draws = 1

    ers = np.empty(nu_draws)
    for i in range(nu_draws):
        gen = rng.stream(seed, "risk-draw", i)
        if fixed_target_weight is not None:
            truth = np.asarray(fixed_target_weight, dtype=float)
        else:
            truth = taskgen.sample_target_weight(gt, spec.track, seed, index=i)
        Xbar = taskgen.whitened_rows(spec.n2, spec.d, spec.input_dist, gen)
        X = Xbar @ roots
        y = taskgen.clean_labels(gt, X, truth) + spec.sigma * gen.standard_normal(spec.n2)
        head = pipeline.fit_target(X, y, truth, gen)
        ers[i] = _single_draw_er(pipeline, gt, spec, truth, head, gen, mc_samples)

    er_mean = float(np.mean(ers))
    er_se = float(np.std(ers, ddof=1) / np.sqrt(nu_draws)) if nu_draws > 1 else 0.0
    rep_term = _rep_term(pipeline, gt, bundle_fixed_sources.X_target)
    return RiskReport(
        er_mean=er_mean,
        er_se=er_se,
        n_draws=nu_draws,
        rep_term=rep_term,
        noise_term=max(er_mean - rep_term, 0.0),
        subspace_dist=float(_pipeline_subspace_dist(pipeline, gt)),
    )


def subspace_distance(B_hat, B_star, Sigma) -> float:
    """Normalized residual of the teacher subspace under the learned one.

    ``|| P_perp(Sigma^{1/2} B_hat) Sigma^{1/2} B_star ||_F / sqrt(k)``; lies
    in [0, 1] for an orthonormal ``B_star`` with ``Sigma = I`` and is
    invariant to invertible reparametrizations of ``B_hat``.
    """
    B_hat = np.asarray(B_hat, dtype=float)
    B_star = np.asarray(B_star, dtype=float)
    root = taskgen.psd_sqrt(np.asarray(Sigma, dtype=float))
    Q = orthonormal_basis(root @ B_hat)
    M = root @ B_star
    resid = M - Q @ (Q.T @ M)
    return float(np.linalg.norm(resid)) / np.sqrt(B_star.shape[1])


def rep_covariance(phi_a, phi_b, sample_X) -> RepCovariance:
    """Empirical covariance blocks and divergence between two feature maps.

    ``phi_a`` and ``phi_b`` map an ``n x d`` sample matrix to ``n x k``
    features (e.g. ``lambda X: X @ B`` or a ReLU feature map).  The
    divergence is the Schur complement
    ``Sigma(b,b) - Sigma(b,a) Sigma(a,a)^+ Sigma(a,b)``; it is PSD and
    vanishes when the two maps agree.
    """
    X = np.asarray(sample_X, dtype=float)
    if X.shape[0] < 1:
        raise ValueError("sample_X must be nonempty")
    n = X.shape[0]
    F = np.asarray(phi_a(X), dtype=float)
    G = np.asarray(phi_b(X), dtype=float)
    Saa = F.T @ F / n
    Sab = F.T @ G / n
    Sbb = G.T @ G / n
    blocks = np.block([[Saa, Sab], [Sab.T, Sbb]])
    D = Sbb - Sab.T @ np.linalg.pinv(Saa, hermitian=True) @ Sab
    return RepCovariance(sigma_blocks=(blocks + blocks.T) / 2.0, divergence=(D + D.T) / 2.0)


def gaussian_width_mc(set_sup_oracle, dim: int, mc_draws: int, seed: int) -> tuple[float, float]:
    """Monte-Carlo Gaussian width: mean of ``sup_{v in K} <v, z>`` over z.

    The oracle may return a certified lower bound on the supremum, in which
    case the estimate is a lower bound on the width.
    """
    gen = rng.stream(seed, "gaussian-width")
    vals = np.array([float(set_sup_oracle(gen.standard_normal(dim))) for _ in range(mc_draws)])
    return float(np.mean(vals)), float(np.std(vals, ddof=1) / np.sqrt(mc_draws))


def _class_sup_value(Xs, V, Z):
    total = 0.0
    for t, X in enumerate(Xs):
        Q = orthonormal_basis(X @ V)
        proj = Q.T @ Z[:, t]
        total += proj @ proj
    return float(np.sqrt(total))


def _class_sup_grad(Xs, V, Z):
    """Gradient of sum_t ||P_{X_t V} z_t||^2 with respect to V."""
    G = np.zeros_like(V)
    for t, X in enumerate(Xs):
        A = X @ V
        z = Z[:, t]
        Q, R = np.linalg.qr(A)
        coef = Q.T @ z
        perp = z - Q @ coef
        try:
            sol = np.linalg.solve(R, coef)
        except np.linalg.LinAlgError:
            sol, *_ = np.linalg.lstsq(A, z, rcond=None)
        G += 2.0 * np.outer(X.T @ perp, sol)
    return G


def _ascend(Xs, V, Z, iters=40):
    val = _class_sup_value(Xs, V, Z)
    step = 1.0
    for _ in range(iters):
        G = _class_sup_grad(Xs, V, Z)
        improved = False
        for _ in range(30):
            Q, _ = np.linalg.qr(V + step * G)
            cand = Q[:, : V.shape[1]]
            cand_val = _class_sup_value(Xs, cand, Z)
            if cand_val > val:
                V, val = cand, cand_val
                step *= 1.5
                improved = True
                break
            step /= 2.0
        if not improved:
            break
    return V, val


def linear_class_width(X_ensemble, k: int, mc_draws: int, restarts: int,
                       seed: int) -> tuple[float, float]:
    """Certified lower bound on the Gaussian width of the data-dependent
    complexity set of the linear representation class.

    Per Gaussian draw ``Z``, projected gradient ascent over matrices ``V``
    with 2k orthonormal columns (QR retraction) maximizes
    ``sqrt(sum_t ||P_{X_t V} z_t||^2)``; every iterate is feasible, so the
    Monte-Carlo mean is a lower bound on the population width.  With the
    shared z-stream the estimate is nondecreasing in ``restarts``.
    """
    if k == 0:
        return 0.0, 0.0
    Xs = [np.asarray(X, dtype=float) for X in X_ensemble]
    T = len(Xs)
    n1, d = Xs[0].shape
    m = 2 * k
    if m > d:
        raise ValueError(f"need 2k <= d, got k={k}, d={d}")

    vals = np.empty(mc_draws)
    for i in range(mc_draws):
        z_gen = rng.stream(seed, "width-z", i)
        Z = z_gen.standard_normal((n1, T))
        best = -np.inf
        for j in range(restarts):
            if j == 0:
                stacked = np.column_stack([X.T @ Z[:, t] for t, X in enumerate(Xs)])
                U, _, _ = np.linalg.svd(stacked, full_matrices=True)
                V0 = U[:, :m]
            else:
                init_gen = rng.stream(seed, "width-init", i * max(restarts, 1) + j)
                V0, _ = np.linalg.qr(init_gen.standard_normal((d, m)))
            _, val = _ascend(Xs, V0, Z)
            best = max(best, val)
        vals[i] = best
    se = float(np.std(vals, ddof=1) / np.sqrt(mc_draws)) if mc_draws > 1 else 0.0
    return float(np.mean(vals)), se
