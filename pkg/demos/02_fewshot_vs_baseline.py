"""Few-shot advantage: k target samples behave like d target samples.

With d=100 ambient dimensions but a k=2 dimensional shared structure, a
target task with only n2=20 samples is hopeless for direct ridge regression
(which pays ~d/n2) but easy on top of a representation learned from the
source tasks (which pays ~k/n2).
"""

import numpy as np

from replearn import EnsembleSpec, make_ensemble
from replearn.estimators import FitOptions, fit_lowdim_mtl
from replearn.risk import LowdimPipeline, RidgeBaselinePipeline, expected_excess_risk

rep_ers, base_ers = [], []
for seed in range(15):
    spec = EnsembleSpec(d=100, k=2, T=25, n1=1000, n2=20, sigma=0.5, master_seed=seed)
    gt, bundle = make_ensemble(spec)

    # representation from the 25 data-rich source tasks, then a k-dim head
    fit = fit_lowdim_mtl(bundle, spec.k, FitOptions(max_iter=100, seed=seed))
    rep = expected_excess_risk(LowdimPipeline(B_hat=fit.B_hat), gt, bundle, 50, seed)

    # oracle-budget ridge on the raw 20 target samples, no representation
    base = expected_excess_risk(RidgeBaselinePipeline(), gt, bundle, 50, seed)

    rep_ers.append(rep.er_mean)
    base_ers.append(base.er_mean)
    print(f"seed {seed:2d}: representation ER={rep.er_mean:.4f}   ridge ER={base.er_mean:.4f}")

print(f"\nmedian representation ER: {np.median(rep_ers):.4f}")
print(f"median direct-ridge ER:   {np.median(base_ers):.4f}")
print(f"advantage factor:         {np.median(base_ers) / np.median(rep_ers):.1f}x")
