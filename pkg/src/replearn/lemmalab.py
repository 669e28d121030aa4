"""Numerical verification of the checkable lemmas and claims.

Two kinds of checks live here.  Exact-algebra identities (resolvent
commutation, the Loewner projection inequality, covariance-implies-
divergence, the source/target ridge identity, and the source-regularization
guarantee under its oracle gate) must pass every trial; any failure is a
bug, not statistics.  Probabilistic bounds (covariance concentration, the
regularizer estimate, matrix deviation, the fixed-design kernel bounds)
must hold with frequency at least 1 - delta at the frozen constants from
:mod:`replearn.constants`.

Trial ``i`` derives its randomness from ``(seed, i)``, so trials can run in
any order or in parallel without changing the outcome.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import constants, rng, taskgen
from .estimators import (
    FitOptions,
    default_nuclear_lambda,
    fit_nuclear_mtl,
    fixed_design_smoother,
    oracle_nuclear_lambda,
)
from .linops import nuclear_norm, resolvent_commute_gap
from .risk import rep_covariance

__all__ = [
    "CheckOutcome",
    "check_move_x",
    "check_loewner",
    "check_cov_implies_div",
    "check_covariance_concentration",
    "check_regularizer_bound",
    "check_norm_theta",
    "check_kernel_fixed_design",
    "check_source_target_identity",
    "check_matrix_deviation",
    "ALL_CHECKS",
]


@dataclass(frozen=True)
class CheckOutcome:
    """Aggregate result of one lemma check.

    ``worst_margin`` is the most-violating signed slack (negative means a
    violated trial); ``calibrated_constant`` is populated by checks that
    estimate one.  ``skipped`` counts trials whose precondition was unmet.
    """

    name: str
    trials: int
    pass_fraction: float
    worst_margin: float
    calibrated_constant: float | None = None
    skipped: int = 0

    def format_line(self) -> str:
        const = "-" if self.calibrated_constant is None else f"{self.calibrated_constant:.6g}"
        return (
            f"{self.name} trials={self.trials} pass_fraction={self.pass_fraction:.4f} "
            f"worst_margin={self.worst_margin:.6e} calibrated_constant={const}"
        )


def _outcome(name, margins, skipped=0, constant=None):
    margins = np.asarray(margins, dtype=float)
    return CheckOutcome(
        name=name,
        trials=int(margins.size),
        pass_fraction=float(np.mean(margins >= 0.0)) if margins.size else 0.0,
        worst_margin=float(np.min(margins)) if margins.size else 0.0,
        calibrated_constant=constant,
        skipped=skipped,
    )


def check_move_x(trials: int = 200, seed: int = 0) -> CheckOutcome:
    """Resolvent commutation: ``(X^T X + lam I)^{-1} X^T = X^T (X X^T + lam I)^{-1}``.

    The identity is exact algebra, so the measured gap is floating-point
    error only and must stay below ``1e-9 (1 + ||X||_2)``.
    """
    margins = []
    for i in range(trials):
        gen = rng.stream(seed, "move-x", i)
        n = int(gen.integers(1, 31))
        m = int(gen.integers(1, 31))
        lam = float(np.exp(gen.uniform(np.log(1e-6), np.log(1e3))))
        X = gen.standard_normal((n, m)) * np.exp(gen.uniform(-2, 2))
        gap = resolvent_commute_gap(X, lam)
        margins.append(1e-9 * (1.0 + np.linalg.norm(X, 2)) - gap)
    return _outcome("move_x", margins)


def check_loewner(trials: int = 500, seed: int = 0) -> CheckOutcome:
    """Loewner projection inequality for stacked designs.

    With ``A1 = [A2; G]`` (so ``A1^T A1 >= A2^T A2`` by construction),
    ``||P_perp(A1 B) A1 B'||_F^2 >= ||P_perp(A2 B) A2 B'||_F^2`` up to 1e-8.
    """
    margins = []
    for i in range(trials):
        gen = rng.stream(seed, "loewner", i)
        m = int(gen.integers(2, 9))
        n2 = int(gen.integers(1, 13))
        ng = int(gen.integers(1, 13))
        p = int(gen.integers(1, m + 1))
        q = int(gen.integers(1, 7))
        A2 = gen.standard_normal((n2, m))
        A1 = np.vstack([A2, gen.standard_normal((ng, m))])
        B = gen.standard_normal((m, p))
        Bp = gen.standard_normal((m, q))
        lhs = _perp_energy(A1, B, Bp)
        rhs = _perp_energy(A2, B, Bp)
        margins.append(lhs - rhs + 1e-8)
    return _outcome("loewner", margins)


def _perp_energy(A, B, Bp):
    from .linops import orthonormal_basis

    M = A @ Bp
    Q = orthonormal_basis(A @ B)
    resid = M - Q @ (Q.T @ M)
    return float(np.sum(resid**2))


def check_cov_implies_div(trials: int = 200, seed: int = 0) -> CheckOutcome:
    """Covariance dominance implies divergence dominance.

    Empirical measures with stacked supports give ``Lambda_q >= alpha
    Lambda_q'`` by construction with ``alpha = n'/n``; the induced
    divergences must then satisfy ``D_q >= alpha D_q'`` (1e-8 eigenvalue
    slack).
    """
    margins = []
    for i in range(trials):
        gen = rng.stream(seed, "cov-div", i)
        d = int(gen.integers(2, 9))
        k = int(gen.integers(1, 4))
        n_prime = int(gen.integers(d + 1, 40))
        n_extra = int(gen.integers(1, 40))
        n = n_prime + n_extra
        Xp = gen.standard_normal((n_prime, d))
        X = np.vstack([Xp, gen.standard_normal((n_extra, d))])
        B = gen.standard_normal((d, k))
        Bp = gen.standard_normal((d, k))
        alpha = n_prime / n
        phi = lambda M: M @ B
        phip = lambda M: M @ Bp
        Dq = rep_covariance(phi, phip, X).divergence
        Dqp = rep_covariance(phi, phip, Xp).divergence
        min_eig = float(np.linalg.eigvalsh(Dq - alpha * Dqp)[0])
        margins.append(min_eig + 1e-8)
    return _outcome("cov_implies_div", margins)


def check_covariance_concentration(d: int = 20, delta: float = 0.05, seed: int = 0,
                                   trials_per_n: int = 100,
                                   n_grid=None) -> CheckOutcome:
    """Empirical sample size for the 0.9/1.1 identity-covariance sandwich.

    Sweeps a grid of n, measures the frequency of
    ``0.9 I <= (1/n) sum a_i a_i^T <= 1.1 I`` over whitened Gaussian draws,
    and reports the smallest n reaching frequency >= 1 - delta together with
    the implied constant ``n / (rho^4 (d + log(1/delta)))`` (rho = 1).
    """
    if n_grid is None:
        n_grid = [int(100 * 2**j) for j in range(10)]
    best_n = None
    freq_at_best = 0.0
    for n in n_grid:
        hits = 0
        for i in range(trials_per_n):
            gen = rng.stream(seed, f"cov-conc-{d}-{n}", i)
            A = gen.standard_normal((n, d))
            ev = np.linalg.eigvalsh(A.T @ A / n)
            hits += bool(ev[0] >= 0.9 and ev[-1] <= 1.1)
        freq = hits / trials_per_n
        if freq >= 1.0 - delta:
            best_n, freq_at_best = n, freq
            break
    if best_n is None:
        return CheckOutcome(
            name=f"covariance_concentration_d{d}", trials=trials_per_n,
            pass_fraction=0.0, worst_margin=-1.0, calibrated_constant=None,
        )
    constant = best_n / (d + np.log(1.0 / delta))
    return CheckOutcome(
        name=f"covariance_concentration_d{d}", trials=trials_per_n,
        pass_fraction=freq_at_best, worst_margin=freq_at_best - (1.0 - delta),
        calibrated_constant=float(constant),
    )


def check_regularizer_bound(spec: taskgen.EnsembleSpec | None = None, trials: int = 200,
                            delta: float = 0.05, seed: int = 0) -> CheckOutcome:
    """Matrix-Bernstein regularizer estimate.

    ``(1/sqrt(n)) ||X^T Z||_2 <= C sigma (log 1/delta)^{3/2} log(T+n)
    sqrt(T ||Sigma|| + Tr Sigma)`` must hold with frequency >= 1 - delta;
    the margin stored per trial is ``1 - ratio``.
    """
    spec = spec or taskgen.EnsembleSpec(d=30, k=2, T=10, n1=200, n2=20, sigma=1.0)
    gt = taskgen.sample_ground_truth(spec)
    Sigma = gt.Sigmas[0]
    root = taskgen.psd_sqrt(Sigma)
    op = float(np.linalg.eigvalsh(Sigma)[-1])
    tr = float(np.trace(Sigma))
    n, T, sig = spec.n1, spec.T, spec.sigma
    bound = (
        constants.REGULARIZER_BOUND_C * sig * np.log(1.0 / delta) ** 1.5
        * np.log(T + n) * np.sqrt(T * op + tr)
    )
    margins = []
    for i in range(trials):
        gen = rng.stream(seed, "reg-bound", i)
        X = taskgen.whitened_rows(n, spec.d, spec.input_dist, gen) @ root
        Z = sig * gen.standard_normal((n, T))
        lhs = float(np.linalg.norm(X.T @ Z, 2)) / np.sqrt(n)
        margins.append(1.0 - lhs / bound if bound > 0 else (1.0 if lhs == 0 else -1.0))
    return _outcome("regularizer_bound", margins)


def check_norm_theta(spec: taskgen.EnsembleSpec | None = None, trials: int = 50,
                     seed: int = 0, lam: float | None = None) -> CheckOutcome:
    """Source-regularization guarantee at the oracle regularization level.

    With ``lam >= (2/n1) ||X*(Z)||_2`` and a certified optimum
    (subgradient residual <= 1e-6), both
    ``(1/n1)||X(Theta_hat - Theta*)||_F^2 <= 3.1 lam ||Theta*||_*`` and
    ``||Theta_hat||_* <= 3.1 ||Theta*||_*`` must hold in every trial.
    Trials whose gate fails (user-supplied lam below the oracle threshold,
    or an uncertified fit) are skipped and counted.
    """
    spec = spec or taskgen.EnsembleSpec(
        d=30, k=2, T=10, n1=100, n2=20, sigma=1.0, track="highdim"
    )
    factor = constants.NORM_THETA_FACTOR
    margins = []
    skipped = 0
    for i in range(trials):
        trial_seed = int(rng.stream(seed, "norm-theta", i).integers(2**62))
        trial_spec = replace(spec, master_seed=trial_seed)
        gt, bundle = taskgen.make_ensemble(trial_spec)
        threshold = oracle_nuclear_lambda(bundle)
        if lam is None:
            default = default_nuclear_lambda(trial_spec.sigma, gt.Sigmas[0], trial_spec.T, trial_spec.n1)
            use_lam = max(default, threshold)
        elif lam < threshold:
            skipped += 1
            continue
        else:
            use_lam = lam
        fit = fit_nuclear_mtl(bundle, use_lam, FitOptions(max_iter=20000))
        if fit.grad_residual > 1e-6:
            skipped += 1
            continue
        Theta_hat = fit.B_hat @ fit.W_hat
        n1 = trial_spec.n1
        R = nuclear_norm(gt.Theta_star)
        fit_err = sum(
            float(np.sum((X @ (Theta_hat[:, t] - gt.Theta_star[:, t])) ** 2))
            for t, X in enumerate(bundle.X)
        ) / n1
        m1 = factor * use_lam * R - fit_err
        m2 = factor * R - nuclear_norm(Theta_hat)
        margins.append(min(m1, m2))
    return _outcome("norm_theta", margins, skipped=skipped)


def check_kernel_fixed_design(spec: taskgen.EnsembleSpec | None = None, trials: int = 50,
                              seed: int = 0) -> CheckOutcome:
    """Fixed-design kernel bounds and the end-to-end excess-risk rate.

    All tasks share one design X.  With the representation from the
    nuclear-norm fit at the oracle regularization level, checks with frozen
    C=10: the smoother bias bound, the smoother energy bound, and the
    closed-form expected excess risk of the ridge-refit target head against
    the theorem's rate expression.
    """
    spec = spec or taskgen.EnsembleSpec(
        d=25, k=2, T=8, n1=100, n2=100, sigma=1.0, track="highdim"
    )
    C = constants.KERNEL_FIX_C
    margins = []
    for i in range(trials):
        trial_seed = int(rng.stream(seed, "kernel-fix", i).integers(2**62))
        trial_spec = replace(spec, master_seed=trial_seed)
        gt = taskgen.sample_ground_truth(trial_spec)
        gen = rng.stream(trial_seed, "kernel-design")
        n, T, sig = trial_spec.n1, trial_spec.T, trial_spec.sigma
        root = taskgen.psd_sqrt(gt.Sigmas[0])
        X = taskgen.whitened_rows(n, trial_spec.d, trial_spec.input_dist, gen) @ root
        Z = sig * gen.standard_normal((n, T))
        Y = X @ gt.Theta_star + Z
        shared = taskgen.TaskBundle(
            spec=trial_spec, X=[X] * T, y=[Y[:, t] for t in range(T)],
            X_target=X, y_target=Y[:, 0], Z=[Z[:, t] for t in range(T)],
            z_target=Z[:, 0], target_weight=gt.Theta_star[:, 0],
        )
        lam = oracle_nuclear_lambda(shared)
        fit = fit_nuclear_mtl(shared, lam, FitOptions(max_iter=20000))
        S = fixed_design_smoother(X, fit.B_hat, lam)
        R = nuclear_norm(gt.Theta_star)
        K = X @ X.T / n
        K_op = float(np.linalg.eigvalsh(K)[-1])

        bias = float(np.sum(((S - np.eye(n)) @ (X @ gt.Theta_star)) ** 2)) / (T * n)
        m1 = C * lam * R / T - bias
        energy = float(np.sum(S**2)) / n
        m2 = C * K_op * R / (n * lam) - energy
        # Closed-form expected ER of the fixed-design ridge head over the
        # coherent target prior and fresh noise:
        # (1/nT)||(S-I)X Theta*||_F^2 + (sigma^2/n)||S||_F^2.
        er = bias + sig**2 * energy
        rate = sig * R * (np.sqrt(K_op / (T * n)) + np.sqrt(np.trace(K)) / (T * np.sqrt(n)))
        m3 = C * rate - er
        margins.append(min(m1, m2, m3))
    return _outcome("kernel_fixed_design", margins)


def check_source_target_identity(spec: taskgen.EnsembleSpec | None = None,
                                 trials: int = 50, seed: int = 0) -> CheckOutcome:
    """Exact source/target ridge identity under the coherent target prior.

    ``E_nu L2(w2^lam) = (1/T) L1(W1^lam)``: the left side is evaluated via
    the linear-Gaussian second-moment trace formula, the right side by
    numerically solving the ridge problem column by column; the two paths
    must agree to 1e-8 relative.
    """
    spec = spec or taskgen.EnsembleSpec(
        d=20, k=3, T=8, n1=50, n2=20, sigma=1.0, track="highdim"
    )
    margins = []
    for i in range(trials):
        gen = rng.stream(seed, "source-target", i)
        trial_spec = replace(spec, master_seed=int(gen.integers(2**62)))
        gt = taskgen.sample_ground_truth(trial_spec)
        Sigma = gt.Sigmas[0]
        d, T = trial_spec.d, trial_spec.T
        m = int(gen.integers(1, 2 * trial_spec.k + 2))
        B_hat = gen.standard_normal((d, m))
        lam = float(np.exp(gen.uniform(np.log(1e-4), np.log(10.0))))

        S_lam = np.linalg.solve(B_hat.T @ Sigma @ B_hat + lam * np.eye(m), B_hat.T @ Sigma)
        root = taskgen.psd_sqrt(Sigma)
        # LHS: E ||Sigma^{1/2}(I - B S) theta||^2 / 2 via the trace identity.
        A = root @ (np.eye(d) - B_hat @ S_lam) @ gt.Theta_star
        lhs = float(np.sum(A**2)) / (2.0 * T)
        # RHS: solve the ridge problem for W numerically, then evaluate L1/T.
        top = np.vstack([root @ B_hat, np.sqrt(lam) * np.eye(m)])
        rhs_mat = np.vstack([root @ gt.Theta_star, np.zeros((m, T))])
        W1, *_ = np.linalg.lstsq(top, rhs_mat, rcond=None)
        resid = root @ (gt.Theta_star - B_hat @ W1)
        rhs = float(np.sum(resid**2)) / (2.0 * T)
        margins.append(1e-8 * (1.0 + rhs) - abs(lhs - rhs))
    return _outcome("source_target_identity", margins)


def check_matrix_deviation(spec: taskgen.EnsembleSpec | None = None, trials: int = 200,
                           delta: float = 0.05, seed: int = 0) -> CheckOutcome:
    """Matrix deviation inequality along random unit directions.

    ``| ||Xv||/sqrt(n) - ||Sigma^{1/2} v|| | <= C rho^2 (sqrt(Tr Sigma) +
    sqrt(log(2/delta) ||Sigma||)) / sqrt(n)`` with frozen C=10, frequency
    >= 1 - delta.
    """
    spec = spec or taskgen.EnsembleSpec(d=40, k=2, T=4, n1=1000, n2=20, sigma=1.0)
    gt = taskgen.sample_ground_truth(spec)
    Sigma = gt.Sigmas[-1]
    root = taskgen.psd_sqrt(Sigma)
    tr = float(np.trace(Sigma))
    op = float(np.linalg.eigvalsh(Sigma)[-1])
    n = spec.n1
    bound = constants.MATRIX_DEVIATION_C * (np.sqrt(tr) + np.sqrt(np.log(2.0 / delta) * op)) / np.sqrt(n)
    margins = []
    for i in range(trials):
        gen = rng.stream(seed, "matrix-dev", i)
        v = gen.standard_normal(spec.d)
        v /= np.linalg.norm(v)
        X = taskgen.whitened_rows(n, spec.d, spec.input_dist, gen) @ root
        dev = abs(np.linalg.norm(X @ v) / np.sqrt(n) - np.linalg.norm(root @ v))
        margins.append(bound - dev)
    return _outcome("matrix_deviation", margins)


ALL_CHECKS = {
    "move_x": check_move_x,
    "loewner": check_loewner,
    "cov_implies_div": check_cov_implies_div,
    "covariance_concentration": check_covariance_concentration,
    "regularizer_bound": check_regularizer_bound,
    "norm_theta": check_norm_theta,
    "kernel_fixed_design": check_kernel_fixed_design,
    "source_target_identity": check_source_target_identity,
    "matrix_deviation": check_matrix_deviation,
}
