"""High-dimensional representations via nuclear-norm regularization.

No explicit dimension constraint: the weight-decayed factored program is
equivalent to nuclear-norm-penalized regression, solved here by proximal
gradient with singular-value thresholding.  At any regularization level at
least (2/n1)||X*(Z)||_2 (computable here because the generator retains the
realized noise), the solution provably satisfies

    (1/n1) ||X(Theta_hat - Theta*)||_F^2 <= 3 lam ||Theta*||_*
    ||Theta_hat||_* <= 3 ||Theta*||_*

and the balanced factor split matches the weight-decay optimum.
"""

import numpy as np

from replearn import EnsembleSpec, make_ensemble
from replearn.estimators import fit_nuclear_mtl, oracle_nuclear_lambda
from replearn.linops import nuclear_norm

spec = EnsembleSpec(d=30, k=2, T=10, n1=100, n2=20, sigma=1.0,
                    track="highdim", master_seed=3)
gt, bundle = make_ensemble(spec)

lam = oracle_nuclear_lambda(bundle)
print(f"oracle regularization level lam = {lam:.4f}")

fit = fit_nuclear_mtl(bundle, lam)
Theta_hat = fit.B_hat @ fit.W_hat
print(f"converged={fit.converged} after {fit.iterations} iterations, "
      f"subgradient residual {fit.grad_residual:.1e}")

R = nuclear_norm(gt.Theta_star)
fit_err = sum(
    float(np.sum((X @ (Theta_hat - gt.Theta_star)[:, t]) ** 2))
    for t, X in enumerate(bundle.X)
) / spec.n1

print(f"\nsource fit error {fit_err:.3f}  vs bound 3*lam*R = {3 * lam * R:.3f}")
print(f"||Theta_hat||_* = {nuclear_norm(Theta_hat):.3f}  vs bound 3*R = {3 * R:.3f}")

balance_gap = abs(np.sum(fit.B_hat**2) - np.sum(fit.W_hat**2))
print(f"factor balance |  ||B||_F^2 - ||W||_F^2  | = {balance_gap:.2e}")
print(f"rank of Theta_hat: {np.linalg.matrix_rank(Theta_hat)} "
      f"(teacher intrinsic rank {spec.k})")
