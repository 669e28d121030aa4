"""Two-layer ReLU networks trained with weight decay.

Full-batch gradient descent on

    (1 / 2 n1 T) sum_t || y_t - relu(X_t B) w_t ||^2
        + (lam/2) ||B||_F^2 + (lam/2) ||W||_F^2

with Armijo backtracking line search, so the objective trace is
nonincreasing by construction.  The hidden weights are stored as a
``d0 x width`` matrix whose columns are the neuron weight vectors; the head
is ``width x T`` with one column per task.  The ReLU subgradient at 0 is
taken to be 0.
"""

from __future__ import annotations

import numpy as np

from .. import rng
from .common import FitOptions, FitResult
from .target import _constrained_lstsq

__all__ = [
    "fit_relu_mtl",
    "fit_relu_target",
    "baseline_scratch_nn",
    "rebalance_net",
    "relu_features",
    "relu_objective",
    "relu_gradient",
    "DegenerateNeuronError",
]

GRAD_TOL = 1e-6
ARMIJO_C = 1e-4
MAX_HALVINGS = 60


class DegenerateNeuronError(ValueError):
    """A neuron with zero input weights carries a nonzero head coefficient."""


def relu_features(X, B):
    return np.maximum(np.asarray(X, dtype=float) @ B, 0.0)


def relu_objective(Xs, ys, B, W, lam):
    T = len(Xs)
    n1 = Xs[0].shape[0]
    data = 0.0
    for t in range(T):
        resid = relu_features(Xs[t], B) @ W[:, t] - ys[t]
        data += resid @ resid
    reg = 0.5 * lam * (np.sum(B**2) + np.sum(W**2))
    return data / (2.0 * n1 * T) + reg


def relu_gradient(Xs, ys, B, W, lam):
    T = len(Xs)
    n1 = Xs[0].shape[0]
    gB = lam * B
    gW = lam * W
    scale = 1.0 / (n1 * T)
    for t in range(T):
        H = Xs[t] @ B
        A = np.maximum(H, 0.0)
        resid = A @ W[:, t] - ys[t]
        gW[:, t] += scale * (A.T @ resid)
        gB += scale * (Xs[t].T @ ((resid[:, None] * W[:, t][None, :]) * (H > 0)))
    return gB, gW


def _train(Xs, ys, width, lam, opts):
    T = len(Xs)
    n1, d0 = Xs[0].shape
    gen = rng.stream(opts.seed, "relu-init")
    B = gen.standard_normal((d0, width)) / np.sqrt(d0)
    norms = np.linalg.norm(B, axis=0)
    B = B / np.where(norms == 0, 1.0, norms)
    W = gen.standard_normal((width, T)) / np.sqrt(width)

    obj = relu_objective(Xs, ys, B, W, lam)
    trace = [obj]
    step = 1.0
    converged = False
    iterations = 0
    grad_norm = np.inf
    for it in range(opts.max_iter):
        iterations = it + 1
        gB, gW = relu_gradient(Xs, ys, B, W, lam)
        grad_sq = float(np.sum(gB**2) + np.sum(gW**2))
        grad_norm = np.sqrt(grad_sq)
        if grad_norm <= GRAD_TOL:
            converged = True
            iterations = it
            break
        if opts.step_rule == "backtracking":
            step = min(step * 2.0, 1e6)
        accepted = False
        for _ in range(MAX_HALVINGS):
            cand_B = B - step * gB
            cand_W = W - step * gW
            cand_obj = relu_objective(Xs, ys, cand_B, cand_W, lam)
            if cand_obj <= obj - ARMIJO_C * step * grad_sq:
                accepted = True
                break
            step /= 2.0
        if not accepted:
            break
        B, W, obj = cand_B, cand_W, cand_obj
        trace.append(obj)

    if not converged:
        gB, gW = relu_gradient(Xs, ys, B, W, lam)
        grad_norm = float(np.sqrt(np.sum(gB**2) + np.sum(gW**2)))
        converged = grad_norm <= GRAD_TOL
    return FitResult(
        B_hat=B, W_hat=W, objective_trace=trace,
        grad_residual=float(grad_norm), converged=converged, iterations=iterations,
    )


def fit_relu_mtl(bundle, width: int, lam: float, opts: FitOptions | None = None) -> FitResult:
    """Train a width-``width`` student on the bundle's source tasks."""
    if width < 1:
        raise ValueError("width must be at least 1")
    opts = opts or FitOptions(max_iter=2000)
    return _train(bundle.X, bundle.y, width, lam, opts)


def fit_relu_target(B_hat, X_target, y_target, r: float) -> np.ndarray:
    """Re-train the output layer on frozen hidden weights, ``||w|| <= r``."""
    return _constrained_lstsq(
        relu_features(X_target, B_hat), np.asarray(y_target, dtype=float), r
    )


def baseline_scratch_nn(X_target, y_target, width: int, lam: float,
                        opts: FitOptions | None = None) -> FitResult:
    """Train a fresh network on the target data alone (no source tasks)."""
    opts = opts or FitOptions(max_iter=2000)
    return _train([np.asarray(X_target, dtype=float)],
                  [np.asarray(y_target, dtype=float)], width, lam, opts)


def rebalance_net(B, W):
    """Per-neuron rescaling to equal input/output weight norms.

    ReLU positive homogeneity keeps the network function unchanged at every
    input while the AM-GM inequality guarantees the weight-decay regularizer
    never increases; at a weight-decay optimum the net is already balanced.
    """
    B = np.asarray(B, dtype=float).copy()
    W = np.asarray(W, dtype=float).copy()
    b_norms = np.linalg.norm(B, axis=0)
    w_norms = np.linalg.norm(W, axis=1)
    for j in range(B.shape[1]):
        b, w = b_norms[j], w_norms[j]
        if b == 0.0:
            if w != 0.0:
                raise DegenerateNeuronError(
                    f"neuron {j} has zero input weights but head norm {w:.3e}"
                )
            continue
        if w == 0.0:
            B[:, j] = 0.0
            continue
        scale = np.sqrt(w / b)
        B[:, j] *= scale
        W[j, :] /= scale
    return B, W
