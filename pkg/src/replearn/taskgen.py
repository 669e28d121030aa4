"""Synthetic ground truths and task ensembles.

Generates multi-task regression problems satisfying, verifiably and not just
in expectation:

* covariance dominance  ``Sigma_t >= c * Sigma_target``  for every source task,
* source-task diversity ``sigma_k(W*)^2 >= T / (4k)``,
* exact noise bookkeeping ``y_t - X_t B* w*_t == z_t``.

Three tracks are supported: ``lowdim`` (d x k orthonormal representation),
``highdim`` (nuclear-norm-controlled d x T coefficient matrix of intrinsic
rank k) and ``relu`` (two-layer teacher network).  Generation is a pure
function of ``(spec, master_seed)``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from . import rng
from .linops import loewner_geq, nuclear_norm

__all__ = [
    "COVARIANCE_FAMILIES",
    "INPUT_DISTS",
    "TRACKS",
    "GenerationError",
    "EnsembleSpec",
    "GroundTruth",
    "TaskBundle",
    "make_covariances",
    "sample_ground_truth",
    "sample_target_weight",
    "sample_tasks",
    "make_ensemble",
    "verify_dominance",
    "save_bundle",
    "load_bundle",
    "psd_sqrt",
    "whitened_rows",
    "clean_labels",
]

COVARIANCE_FAMILIES = ("identity", "diagonal-decay", "random-psd")
INPUT_DISTS = ("gaussian", "scaled-rademacher")
TRACKS = ("lowdim", "highdim", "relu")

DIVERSITY_RETRIES = 100

_MAGIC = b"RLB1"


class GenerationError(RuntimeError):
    """Raised when a ground truth cannot be generated for the given spec."""


@dataclass(frozen=True)
class EnsembleSpec:
    """All generative knobs of a synthetic ensemble.

    ``d`` is the ambient input dimension, ``k`` the representation dimension
    (teacher hidden width on the relu track), ``T`` the number of source
    tasks, ``n1``/``n2`` the per-source/target sample counts, ``sigma`` the
    label noise level and ``c`` the covariance-dominance constant.
    """

    d: int
    k: int
    T: int
    n1: int
    n2: int
    sigma: float = 1.0
    c: float = 1.0
    covariance_family: str = "identity"
    input_dist: str = "gaussian"
    master_seed: int = 0
    track: str = "lowdim"

    def __post_init__(self):
        if self.d < 1 or self.k < 1 or self.T < 1:
            raise ValueError("d, k and T must be positive")
        if self.n1 < 1 or self.n2 < 1:
            raise ValueError("n1 and n2 must be at least 1")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if not 0 < self.c <= 1:
            raise ValueError("c must lie in (0, 1]")
        if self.covariance_family not in COVARIANCE_FAMILIES:
            raise ValueError(f"unknown covariance_family {self.covariance_family!r}")
        if self.input_dist not in INPUT_DISTS:
            raise ValueError(f"unknown input_dist {self.input_dist!r}")
        if self.track not in TRACKS:
            raise ValueError(f"unknown track {self.track!r}")
        if self.track == "lowdim" and 2 * self.k > min(self.d, self.T):
            raise ValueError(
                f"lowdim track requires 2k <= min(d, T), got k={self.k}, d={self.d}, T={self.T}"
            )


@dataclass(frozen=True)
class GroundTruth:
    """Teacher parameters plus the per-task population covariances."""

    spec: EnsembleSpec
    Sigmas: list[np.ndarray]
    B_star: np.ndarray | None = None
    W_star: np.ndarray | None = None
    Theta_star: np.ndarray | None = None
    R: float | None = None
    nn_hidden: np.ndarray | None = None
    nn_head: np.ndarray | None = None

    @property
    def Sigma_target(self) -> np.ndarray:
        return self.Sigmas[-1]


@dataclass(frozen=True)
class TaskBundle:
    """Realized designs, labels and noise for T source tasks plus one target."""

    spec: EnsembleSpec
    X: list[np.ndarray]
    y: list[np.ndarray]
    X_target: np.ndarray
    y_target: np.ndarray
    Z: list[np.ndarray]
    z_target: np.ndarray
    target_weight: np.ndarray


def psd_sqrt(S):
    w, V = np.linalg.eigh(S)
    return (V * np.sqrt(np.maximum(w, 0.0))) @ V.T


def _random_orthogonal(d, gen):
    Q, R = np.linalg.qr(gen.standard_normal((d, d)))
    return Q * np.sign(np.diag(R))


def make_covariances(spec: EnsembleSpec) -> list[np.ndarray]:
    """Population covariances ``Sigma_1..Sigma_{T+1}`` for the ensemble.

    Dominance ``Sigma_t >= c * Sigma_{T+1}`` holds by construction: source
    covariances are ``c * Sigma_{T+1}`` plus a PSD perturbation.  On the
    highdim and relu tracks all covariances are forced equal (shared input
    distribution), which satisfies dominance for any ``c <= 1``.
    """
    d, T, c = spec.d, spec.T, spec.c
    gen = rng.stream(spec.master_seed, "covariances")
    if spec.covariance_family == "identity":
        base = np.eye(d)
    elif spec.covariance_family == "diagonal-decay":
        base = np.diag(1.0 / np.arange(1, d + 1))
    else:
        Q = _random_orthogonal(d, gen)
        base = (Q * (1.0 / np.arange(1, d + 1))) @ Q.T
        base = (base + base.T) / 2.0

    # Identity family and the shared-covariance tracks: every task gets the
    # same matrix, and dominance holds for any c <= 1.
    if spec.covariance_family == "identity" or spec.track in ("highdim", "relu"):
        return [base.copy() for _ in range(T + 1)]

    sigmas = []
    for _ in range(T):
        if spec.covariance_family == "diagonal-decay":
            # u in [0, 1-c] keeps c * Sigma_target <= Sigma_t <= Sigma_target.
            u = gen.uniform(0.0, 1.0 - c, size=d)
            S = c * base + np.diag(u / np.arange(1, d + 1))
        else:
            V = _random_orthogonal(d, gen)
            u = gen.uniform(0.0, (1.0 - c) / d, size=d)
            S = c * base + (V * u) @ V.T
        sigmas.append((S + S.T) / 2.0)
    sigmas.append(base.copy())
    return sigmas


def _diverse_heads(k, T, gen):
    """Unit-norm columns with sigma_k(W)^2 >= T/(4k), resampled if needed."""
    for _ in range(DIVERSITY_RETRIES):
        W = gen.standard_normal((k, T))
        W /= np.linalg.norm(W, axis=0, keepdims=True)
        s = np.linalg.svd(W, compute_uv=False)
        sigma_k = s[k - 1] if s.size >= k else 0.0
        if sigma_k**2 >= T / (4.0 * k):
            return W
    raise GenerationError(
        f"could not draw diverse heads with sigma_k^2 >= T/(4k) after "
        f"{DIVERSITY_RETRIES} retries (k={k}, T={T}); the spec is likely infeasible"
    )


def sample_ground_truth(spec: EnsembleSpec) -> GroundTruth:
    """Draw a ground truth for the spec's track.

    lowdim: orthonormalized Gaussian ``B*`` and diverse unit-norm heads.
    highdim: ``Theta* = B* W*`` of intrinsic rank k with recorded nuclear norm.
    relu: teacher network with unit-norm neuron weight vectors.
    """
    sigmas = make_covariances(spec)
    gen = rng.stream(spec.master_seed, "ground-truth")
    d, k, T = spec.d, spec.k, spec.T

    if spec.track == "relu":
        hidden = gen.standard_normal((d, k))
        hidden /= np.linalg.norm(hidden, axis=0, keepdims=True)
        head = gen.standard_normal((k, T))
        head /= np.linalg.norm(head, axis=0, keepdims=True)
        return GroundTruth(spec=spec, Sigmas=sigmas, nn_hidden=hidden, nn_head=head)

    if k > d:
        raise GenerationError(f"k={k} exceeds d={d}")
    B, Rq = np.linalg.qr(gen.standard_normal((d, k)))
    B = B * np.sign(np.diag(Rq))
    W = _diverse_heads(k, T, gen)
    if spec.track == "lowdim":
        return GroundTruth(spec=spec, Sigmas=sigmas, B_star=B, W_star=W)

    Theta = B @ W
    return GroundTruth(
        spec=spec, Sigmas=sigmas, B_star=B, W_star=W,
        Theta_star=Theta, R=nuclear_norm(Theta),
    )


def sample_target_weight(gt: GroundTruth, track: str, seed: int, index: int = 0) -> np.ndarray:
    """Draw one target-task weight from the track's target distribution.

    lowdim: uniform on the unit sphere of R^k, so ``E[w w^T] = I/k``.
    highdim: ``theta = Theta* g / sqrt(T)`` with ``g ~ N(0, I_T)``, giving the
    coherent Gaussian ``N(0, Theta* Theta*^T / T)``.
    relu: a Gaussian mixture of the teacher task heads at the same 1/sqrt(T)
    normalization, i.e. a target that looks like a typical source task.
    """
    gen = rng.stream(seed, "target-weight", index)
    if track == "lowdim":
        w = gen.standard_normal(gt.spec.k)
        return w / np.linalg.norm(w)
    if track == "highdim":
        g = gen.standard_normal(gt.spec.T)
        return gt.Theta_star @ g / np.sqrt(gt.spec.T)
    if track == "relu":
        g = gen.standard_normal(gt.spec.T)
        return gt.nn_head @ g / np.sqrt(gt.spec.T)
    raise ValueError(f"unknown track {track!r}")


def whitened_rows(n, d, dist, gen):
    if dist == "gaussian":
        return gen.standard_normal((n, d))
    # Rademacher +-1 entries: zero mean, identity covariance.
    return gen.integers(0, 2, size=(n, d)).astype(float) * 2.0 - 1.0


def clean_labels(gt: GroundTruth, X: np.ndarray, weight: np.ndarray) -> np.ndarray:
    if gt.spec.track == "lowdim":
        return X @ (gt.B_star @ weight)
    if gt.spec.track == "highdim":
        return X @ weight
    return np.maximum(X @ gt.nn_hidden, 0.0) @ weight


def sample_tasks(spec: EnsembleSpec, gt: GroundTruth) -> TaskBundle:
    """Realize designs and labels for all source tasks plus the target task.

    Rows of ``X_t`` are ``Sigma_t^{1/2} xbar`` with ``xbar`` from the whitened
    input distribution; labels follow the track's teacher with independent
    ``N(0, sigma^2)`` noise.  The realized noise is retained so downstream
    oracle checks (e.g. the oracle regularization level) are exact.
    """
    roots = [psd_sqrt(S) for S in gt.Sigmas]
    Xs, ys, Zs = [], [], []
    for t in range(spec.T):
        gen = rng.stream(spec.master_seed, "task", t)
        Xbar = whitened_rows(spec.n1, spec.d, spec.input_dist, gen)
        X = Xbar @ roots[t]
        z = spec.sigma * gen.standard_normal(spec.n1)
        if spec.track == "lowdim":
            w = gt.W_star[:, t]
        elif spec.track == "highdim":
            w = gt.Theta_star[:, t]
        else:
            w = gt.nn_head[:, t]
        Xs.append(X)
        ys.append(clean_labels(gt, X, w) + z)
        Zs.append(z)

    gen = rng.stream(spec.master_seed, "target-task")
    Xbar = whitened_rows(spec.n2, spec.d, spec.input_dist, gen)
    X_target = Xbar @ roots[-1]
    z_target = spec.sigma * gen.standard_normal(spec.n2)
    w_target = sample_target_weight(gt, spec.track, spec.master_seed)
    y_target = clean_labels(gt, X_target, w_target) + z_target

    return TaskBundle(
        spec=spec, X=Xs, y=ys, X_target=X_target, y_target=y_target,
        Z=Zs, z_target=z_target, target_weight=w_target,
    )


def make_ensemble(spec: EnsembleSpec) -> tuple[GroundTruth, TaskBundle]:
    """Convenience: ground truth plus one realized bundle."""
    gt = sample_ground_truth(spec)
    return gt, sample_tasks(spec, gt)


def verify_dominance(gt: GroundTruth, tol: float = 1e-10) -> float:
    """Smallest eigenvalue of ``Sigma_t - c * Sigma_target`` over source tasks."""
    worst = np.inf
    for S in gt.Sigmas[:-1]:
        res = loewner_geq(S, gt.spec.c * gt.Sigma_target, tol)
        worst = min(worst, res.min_eigenvalue)
    return float(worst)


def save_bundle(bundle: TaskBundle, path) -> None:
    """Write a bundle to the plain binary RLB1 container.

    Layout: magic ``RLB1``; then ``d, k, T, n1, n2`` as little-endian u64;
    then little-endian f64 matrices in declared order: the T source designs
    (row-major), the T source label vectors, the target design, the target
    labels, the T source noise vectors, the target noise, and finally the
    target weight (its length is whatever remains in the file).
    """
    spec = bundle.spec
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<5Q", spec.d, spec.k, spec.T, spec.n1, spec.n2))
        parts = list(bundle.X) + list(bundle.y) + [
            bundle.X_target, bundle.y_target,
        ] + list(bundle.Z) + [bundle.z_target, bundle.target_weight]
        for arr in parts:
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_bundle(path, spec: EnsembleSpec | None = None) -> TaskBundle:
    """Read an RLB1 container written by :func:`save_bundle`.

    The header carries only the dimensions; pass the generating ``spec`` to
    reattach the full metadata, otherwise a placeholder spec with default
    knobs is synthesized from the header.
    """
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _MAGIC:
            raise ValueError(f"not an RLB1 container (magic {magic!r})")
        d, k, T, n1, n2 = struct.unpack("<5Q", fh.read(40))
        payload = np.frombuffer(fh.read(), dtype="<f8")

    if spec is None:
        spec = EnsembleSpec(d=d, k=k, T=T, n1=n1, n2=n2, track="highdim")
    elif (spec.d, spec.k, spec.T, spec.n1, spec.n2) != (d, k, T, n1, n2):
        raise ValueError("spec dimensions do not match the container header")

    pos = 0

    def take(count):
        nonlocal pos
        out = payload[pos:pos + count]
        if out.size != count:
            raise ValueError("truncated RLB1 container")
        pos += count
        return np.array(out)

    Xs = [take(n1 * d).reshape(n1, d) for _ in range(T)]
    ys = [take(n1) for _ in range(T)]
    X_target = take(n2 * d).reshape(n2, d)
    y_target = take(n2)
    Zs = [take(n1) for _ in range(T)]
    z_target = take(n2)
    target_weight = np.array(payload[pos:])
    return TaskBundle(
        spec=spec, X=Xs, y=ys, X_target=X_target, y_target=y_target,
        Z=Zs, z_target=z_target, target_weight=target_weight,
    )
