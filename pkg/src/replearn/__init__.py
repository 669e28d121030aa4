"""Few-shot representation learning lab.

Synthetic multi-task ensembles (low-dimensional linear, high-dimensional
nuclear-norm-controlled, and two-layer ReLU teachers), the matching
estimation pipelines and baselines, exact and Monte-Carlo excess-risk
evaluation, numerical verification of the supporting matrix lemmas, and a
deterministic sweep harness for reproducing the excess-risk scaling laws.
"""

from . import constants, estimators, harness, lemmalab, linops, risk, rng, taskgen
from .estimators import FitOptions, FitResult
from .harness import SlopeFit, SweepConfig, fit_scaling_slope, run_sweep
from .lemmalab import CheckOutcome
from .risk import RiskReport, expected_excess_risk, subspace_distance
from .taskgen import EnsembleSpec, GroundTruth, TaskBundle, make_ensemble

__version__ = "0.1.0"

__all__ = [
    "constants", "estimators", "harness", "lemmalab", "linops", "risk", "rng", "taskgen",
    "FitOptions", "FitResult", "SlopeFit", "SweepConfig", "CheckOutcome",
    "RiskReport", "EnsembleSpec", "GroundTruth", "TaskBundle",
    "expected_excess_risk", "subspace_distance", "fit_scaling_slope",
    "run_sweep", "make_ensemble",
    "__version__",
]
