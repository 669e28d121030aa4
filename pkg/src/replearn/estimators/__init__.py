"""Learning pipelines: low-dim ERM, nuclear-norm MTL, fixed-design kernel
ridge, weight-decayed ReLU nets, and the target-side fitters and baselines."""

from .common import FitOptions, FitResult, InfeasibleFitError
from .lowdim import fit_lowdim_mtl
from .nuclear import (
    adjoint_apply,
    default_nuclear_lambda,
    fit_nuclear_mtl,
    fixed_design_smoother,
    oracle_nuclear_lambda,
)
from .relu import (
    DegenerateNeuronError,
    baseline_scratch_nn,
    fit_relu_mtl,
    fit_relu_target,
    rebalance_net,
    relu_features,
    relu_gradient,
    relu_objective,
)
from .target import baseline_target_ridge, fit_target_constrained, fit_target_linear

__all__ = [
    "FitOptions",
    "FitResult",
    "InfeasibleFitError",
    "DegenerateNeuronError",
    "fit_lowdim_mtl",
    "fit_target_linear",
    "fit_nuclear_mtl",
    "fit_target_constrained",
    "fixed_design_smoother",
    "fit_relu_mtl",
    "fit_relu_target",
    "baseline_target_ridge",
    "baseline_scratch_nn",
    "rebalance_net",
    "relu_features",
    "relu_gradient",
    "relu_objective",
    "adjoint_apply",
    "default_nuclear_lambda",
    "oracle_nuclear_lambda",
]
