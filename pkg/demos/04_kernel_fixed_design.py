"""Fixed-design kernel view: bias-variance of the ridge smoother.

All tasks share one design matrix X.  The representation from the
nuclear-norm fit induces a smoother S that maps target labels to fitted
values; its bias and its Frobenius energy trade off through the
regularization level, and the closed-form expected excess risk of the
ridge-refit head stays below the rate

    C * sigma * ||Theta*||_* * ( sqrt(||K||/(T n)) + sqrt(Tr K)/(T sqrt(n)) )

with the frozen constant C = 10.
"""

import numpy as np

from replearn import rng
from replearn.estimators import fit_nuclear_mtl, fixed_design_smoother, oracle_nuclear_lambda
from replearn.lemmalab import check_kernel_fixed_design
from replearn.linops import nuclear_norm
from replearn.taskgen import EnsembleSpec, TaskBundle, sample_ground_truth

spec = EnsembleSpec(d=25, k=2, T=8, n1=100, n2=100, sigma=1.0,
                    track="highdim", master_seed=5)
gt = sample_ground_truth(spec)
gen = rng.stream(5, "demo-fixed-design")

n, T = spec.n1, spec.T
X = gen.standard_normal((n, spec.d))
Z = spec.sigma * gen.standard_normal((n, T))
Y = X @ gt.Theta_star + Z
bundle = TaskBundle(spec=spec, X=[X] * T, y=[Y[:, t] for t in range(T)],
                    X_target=X, y_target=Y[:, 0], Z=[Z[:, t] for t in range(T)],
                    z_target=Z[:, 0], target_weight=gt.Theta_star[:, 0])

lam = oracle_nuclear_lambda(bundle)
fit = fit_nuclear_mtl(bundle, lam)
S = fixed_design_smoother(X, fit.B_hat, lam)
R = nuclear_norm(gt.Theta_star)

bias = float(np.sum(((S - np.eye(n)) @ (X @ gt.Theta_star)) ** 2)) / (T * n)
energy = float(np.sum(S**2)) / n
er = bias + spec.sigma**2 * energy

print(f"smoother bias     {bias:.4f}  vs bound lam*R/T         = {lam * R / T:.4f}")
print(f"smoother energy   {energy:.4f}  vs bound ||K|| R/(n lam)  = "
      f"{float(np.linalg.eigvalsh(X @ X.T / n)[-1]) * R / (n * lam):.4f}")
print(f"expected ER       {er:.4f}")

print("\nrunning the full 50-seed check at the frozen constant:")
print(check_kernel_fixed_design(spec=spec, trials=50, seed=5).format_line())
