"""The lemma zoo: numerical verification of every checkable supporting fact.

Exact-algebra identities must pass every trial; probabilistic bounds must
hold at 95% frequency with the frozen constants.  The covariance
concentration check calibrates its own sample-size constant and reports it.
"""

from replearn import lemmalab

EXACT = ("move_x", "loewner", "cov_implies_div", "source_target_identity",
         "norm_theta", "kernel_fixed_design")
PROBABILISTIC = ("regularizer_bound", "matrix_deviation")

print("exact algebra (pass_fraction must be 1.0):")
for name in EXACT:
    print(" ", lemmalab.ALL_CHECKS[name](trials=50, seed=42).format_line())

print("\nprobabilistic bounds (frequency >= 0.95 at frozen constants):")
for name in PROBABILISTIC:
    print(" ", lemmalab.ALL_CHECKS[name](trials=100, seed=42).format_line())

print("\ncovariance concentration (self-calibrating sample size):")
for d in (1, 5):
    out = lemmalab.check_covariance_concentration(d=d, seed=42, trials_per_n=50)
    print(" ", out.format_line())
