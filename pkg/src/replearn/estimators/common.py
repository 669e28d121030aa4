"""Shared fit configuration and result types."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["FitOptions", "FitResult", "InfeasibleFitError"]


class InfeasibleFitError(ValueError):
    """Raised when a fit is requested on an ensemble that cannot support it."""


@dataclass(frozen=True)
class FitOptions:
    """Solver knobs shared by the source-side fitters.

    ``tol`` is a relative objective-decrease threshold, ``lam`` the
    regularization weight, ``r`` the target-side norm budget and ``width``
    the student hidden width for the relu trainer.
    """

    max_iter: int = 500
    tol: float = 1e-12
    restarts: int = 1
    step_rule: str = "backtracking"
    lam: float = 0.0
    r: float = np.inf
    width: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")
        if self.step_rule not in ("fixed-lipschitz", "backtracking"):
            raise ValueError(f"unknown step_rule {self.step_rule!r}")
        if self.lam < 0:
            raise ValueError("lam must be nonnegative")
        if self.r < 0:
            raise ValueError("r must be nonnegative")


@dataclass
class FitResult:
    """Learned representation and heads plus optimizer diagnostics."""

    B_hat: np.ndarray
    W_hat: np.ndarray
    objective_trace: list[float] = field(default_factory=list)
    grad_residual: float = np.inf
    converged: bool = False
    iterations: int = 0

    @property
    def objective(self) -> float:
        return self.objective_trace[-1] if self.objective_trace else np.inf
