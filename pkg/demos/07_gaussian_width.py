"""Gaussian widths: the complexity measure behind the scaling laws.

Monte-Carlo width estimation for sets with a computable support function,
then a certified lower bound on the width of the data-dependent complexity
set of the linear representation class via ascent on the orthonormal-matrix
manifold.  The squared width stays far below the 2kT + 2kd log(n1) budget
that drives the source-task sample complexity.
"""

import math

import numpy as np

from replearn import EnsembleSpec, make_ensemble
from replearn.risk import gaussian_width_mc, linear_class_width

# Unit sphere in R^16: the width is E||g||, known in closed form.
est, se = gaussian_width_mc(lambda z: float(np.linalg.norm(z)), 16, 50_000, 1)
analytic = math.sqrt(2.0) * math.exp(math.lgamma(17 / 2) - math.lgamma(8))
print(f"sphere in R^16: estimate {est:.4f} +- {se:.4f}, analytic {analytic:.4f}")

# A finite set: the 16 scaled vertices of the hypercube, brute-force support.
vertices = np.array([[1 if (i >> j) & 1 else -1 for j in range(4)]
                     for i in range(16)]) / 2.0
est, se = gaussian_width_mc(lambda z: float(np.max(vertices @ z)), 4, 50_000, 2)
print(f"hypercube vertices in R^4: estimate {est:.4f} +- {se:.4f}")

# Data-dependent set for linear representations of dimension k.
spec = EnsembleSpec(d=10, k=2, T=5, n1=20, n2=10, sigma=1.0, master_seed=3)
_, bundle = make_ensemble(spec)
est, se = linear_class_width(bundle.X, spec.k, mc_draws=40, restarts=3, seed=4)
budget = 20 * (2 * spec.k * spec.T + 2 * spec.k * spec.d * math.log(spec.n1))
print(f"linear-class set (d={spec.d}, k={spec.k}, T={spec.T}, n1={spec.n1}): "
      f"lower bound {est:.3f} +- {se:.3f}")
print(f"squared width {est**2:.1f} vs complexity budget {budget:.1f}")
