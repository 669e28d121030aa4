"""Configuration-driven experiment runner.

Sweeps one ensemble parameter over a grid, fits the requested methods on a
shared ensemble per (value, seed) cell, evaluates expected excess risk and
emits stable-schema CSV rows.  All outputs are pure functions of the config
and the master seed: per-cell randomness derives from the cell's indices,
rows are gathered and sorted deterministically, and parallel execution
cannot change any emitted byte.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import rng, taskgen
from .estimators import (
    FitOptions,
    default_nuclear_lambda,
    fit_lowdim_mtl,
    fit_nuclear_mtl,
    fit_relu_mtl,
)
from .risk import (
    LowdimPipeline,
    NuclearPipeline,
    ReluPipeline,
    RidgeBaselinePipeline,
    ScratchNNPipeline,
    expected_excess_risk,
)

__all__ = [
    "METHODS",
    "SWEEP_AXES",
    "CSV_COLUMNS",
    "SweepConfig",
    "SlopeFit",
    "run_sweep",
    "fit_scaling_slope",
    "write_csv",
    "read_csv",
    "parse_config",
    "load_config",
]

METHODS = ("lowdim", "nuclear", "relu", "baseline-ridge", "baseline-nn-scratch")
SWEEP_AXES = ("d", "k", "T", "n1", "n2", "sigma", "c")

CSV_COLUMNS = (
    "sweep_id", "axis", "axis_value", "seed", "method",
    "d", "k", "T", "n1", "n2", "sigma", "c",
    "er_mean", "er_se", "rep_term", "noise_term", "subspace_dist",
    "kappa", "runtime_ms", "error_flag",
)

_METHOD_TRACKS = {
    "lowdim": ("lowdim",),
    "nuclear": ("highdim",),
    "relu": ("relu",),
    "baseline-ridge": ("lowdim", "highdim"),
    "baseline-nn-scratch": ("relu",),
}

# Default weight decay and student-width multiple for the ReLU trainers.
RELU_DEFAULT_LAMBDA = 1e-4
RELU_WIDTH_MULTIPLE = 2


@dataclass(frozen=True)
class SweepConfig:
    """One parameter sweep: base ensemble, axis, grid, methods."""

    base_spec: taskgen.EnsembleSpec
    axis: str
    values: tuple
    seeds_per_point: int
    methods: tuple[str, ...]
    nu_draws: int = 200
    output_path: str | None = None
    sweep_id: str = "sweep"

    def __post_init__(self):
        if self.axis not in SWEEP_AXES:
            raise ValueError(f"axis must be one of {SWEEP_AXES}, got {self.axis!r}")
        if len(self.values) == 0:
            raise ValueError("values must be nonempty")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ValueError("values must be strictly increasing")
        if self.seeds_per_point < 1:
            raise ValueError("seeds_per_point must be at least 1")
        if not self.methods:
            raise ValueError("at least one method is required")
        for m in self.methods:
            if m not in METHODS:
                raise ValueError(f"unknown method {m!r}; choose from {METHODS}")
            if self.base_spec.track not in _METHOD_TRACKS[m]:
                raise ValueError(
                    f"method {m!r} does not apply to track {self.base_spec.track!r}"
                )
        if self.nu_draws < 1:
            raise ValueError("nu_draws must be at least 1")


@dataclass(frozen=True)
class SlopeFit:
    """Log-log OLS fit of seed-medians against the sweep axis."""

    slope: float
    intercept: float
    stderr: float
    r_squared: float


def _kappa(gt):
    lo, hi = np.inf, 0.0
    for S in gt.Sigmas[:-1]:
        ev = np.linalg.eigvalsh(S)
        lo = min(lo, float(ev[0]))
        hi = max(hi, float(ev[-1]))
    return hi / lo if lo > 0 else np.inf


def _build_pipeline(method, spec, gt, bundle, cell_seed):
    if method == "lowdim":
        fit = fit_lowdim_mtl(bundle, spec.k, FitOptions(max_iter=100, seed=cell_seed))
        return LowdimPipeline(B_hat=fit.B_hat)
    if method == "nuclear":
        lam = default_nuclear_lambda(spec.sigma, gt.Sigmas[0], spec.T, spec.n1)
        lam = max(lam, 1e-8)
        fit = fit_nuclear_mtl(bundle, lam, FitOptions(max_iter=20000, seed=cell_seed))
        r = 2.0 * np.sqrt(gt.R / spec.T)
        return NuclearPipeline(B_hat=fit.B_hat, r=r)
    if method == "relu":
        width = RELU_WIDTH_MULTIPLE * spec.k
        fit = fit_relu_mtl(bundle, width, RELU_DEFAULT_LAMBDA,
                           FitOptions(max_iter=3000, seed=cell_seed))
        r_sq = (np.sum(gt.nn_hidden**2) + np.sum(gt.nn_head**2)) / spec.T
        return ReluPipeline(B_hat=fit.B_hat, r=float(np.sqrt(r_sq)))
    if method == "baseline-ridge":
        return RidgeBaselinePipeline()
    if method == "baseline-nn-scratch":
        width = RELU_WIDTH_MULTIPLE * spec.k
        return ScratchNNPipeline(width=width, lam=RELU_DEFAULT_LAMBDA,
                                 opts=FitOptions(max_iter=3000, seed=cell_seed))
    raise ValueError(f"unknown method {method!r}")


def _error_row(config, value, seed, method, spec_fields):
    row = {
        "sweep_id": config.sweep_id, "axis": config.axis, "axis_value": value,
        "seed": seed, "method": method,
        "er_mean": math.nan, "er_se": math.nan, "rep_term": math.nan,
        "noise_term": math.nan, "subspace_dist": math.nan, "kappa": math.nan,
        "runtime_ms": 0, "error_flag": 1,
    }
    row.update(spec_fields)
    return row


def _cell_rows(config, value_index, seed_index):
    """All method rows for one (axis value, seed) cell, on a shared ensemble."""
    value = config.values[value_index]
    base = config.base_spec
    cell_seed = int(
        rng.stream(base.master_seed, "sweep-cell",
                   value_index * config.seeds_per_point + seed_index).integers(2**62)
    )
    axis_value = int(value) if config.axis in ("d", "k", "T", "n1", "n2") else float(value)
    spec_fields = {f: getattr(base, f) for f in ("d", "k", "T", "n1", "n2", "sigma", "c")}
    spec_fields[config.axis] = axis_value
    try:
        spec = replace(base, master_seed=cell_seed, **{config.axis: axis_value})
        gt, bundle = taskgen.make_ensemble(spec)
        kappa = _kappa(gt)
    except Exception:
        return [
            _error_row(config, axis_value, seed_index, m, spec_fields)
            for m in sorted(config.methods)
        ]

    rows = []
    for method in sorted(config.methods):
        start = time.perf_counter()
        try:
            pipeline = _build_pipeline(method, spec, gt, bundle, cell_seed)
            report = expected_excess_risk(pipeline, gt, bundle, config.nu_draws, cell_seed)
        except Exception:
            rows.append(_error_row(config, axis_value, seed_index, method, spec_fields))
            continue
        elapsed_ms = int(round((time.perf_counter() - start) * 1000))
        row = {
            "sweep_id": config.sweep_id, "axis": config.axis, "axis_value": axis_value,
            "seed": seed_index, "method": method,
            "er_mean": report.er_mean, "er_se": report.er_se,
            "rep_term": report.rep_term, "noise_term": report.noise_term,
            "subspace_dist": report.subspace_dist, "kappa": kappa,
            "runtime_ms": elapsed_ms, "error_flag": 0,
        }
        row.update(spec_fields)
        rows.append(row)
    return rows


def _max_workers():
    env = os.environ.get("REPLEARN_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def run_sweep(config: SweepConfig) -> list[dict]:
    """Execute the sweep and return rows sorted by (axis value, seed, method).

    Cells run in parallel up to ``REPLEARN_THREADS`` workers; each cell's
    randomness is derived from its grid indices, so the emitted rows are
    identical under any schedule.  Failed cells degrade to flagged rows.
    """
    cells = [
        (vi, si)
        for vi in range(len(config.values))
        for si in range(config.seeds_per_point)
    ]
    workers = _max_workers()
    if workers == 1 or len(cells) == 1:
        nested = [_cell_rows(config, vi, si) for vi, si in cells]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            nested = list(pool.map(lambda c: _cell_rows(config, *c), cells))
    rows = [row for cell in nested for row in cell]
    rows.sort(key=lambda r: (r["axis_value"], r["seed"], r["method"]))
    return rows


def fit_scaling_slope(rows, x_field: str, y_field: str) -> SlopeFit:
    """OLS of log(seed-median y) on log(x) across the sweep grid.

    Medians are robust to occasional optimizer plateaus; rows flagged as
    errors are excluded.  Requires at least 3 distinct positive x values
    with positive medians.
    """
    groups: dict[float, list[float]] = {}
    for row in rows:
        if int(row.get("error_flag", 0)) != 0:
            continue
        groups.setdefault(float(row[x_field]), []).append(float(row[y_field]))
    xs = np.array(sorted(groups))
    if xs.size < 3:
        raise ValueError(f"need at least 3 distinct x values, got {xs.size}")
    if np.any(xs <= 0):
        raise ValueError("x values must be positive for a log-log fit")
    med = np.array([np.median(groups[x]) for x in xs])
    if np.any(~np.isfinite(med)) or np.any(med <= 0):
        raise ValueError("y medians must be positive and finite for a log-log fit")

    lx, ly = np.log(xs), np.log(med)
    lx_c = lx - lx.mean()
    sxx = float(np.sum(lx_c**2))
    slope = float(np.sum(lx_c * ly) / sxx)
    intercept = float(ly.mean() - slope * lx.mean())
    resid = ly - (intercept + slope * lx)
    ss_res = float(np.sum(resid**2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    if ss_tot <= 1e-30:
        return SlopeFit(slope=slope, intercept=intercept, stderr=0.0, r_squared=0.0)
    dof = max(len(xs) - 2, 1)
    stderr = float(np.sqrt(ss_res / dof / sxx))
    return SlopeFit(slope=slope, intercept=intercept, stderr=stderr,
                    r_squared=1.0 - ss_res / ss_tot)


def _format_value(col, value):
    if col in ("sweep_id", "axis", "method"):
        return str(value)
    if col in ("seed", "d", "k", "T", "n1", "n2", "runtime_ms", "error_flag"):
        return str(int(value))
    v = float(value)
    return format(v, ".17g")


def write_csv(rows, path) -> None:
    """Write rows in the fixed schema-1 column order.

    ``runtime_ms`` is zeroed on disk: persisted sweeps are byte-identical
    across reruns of the same config and master seed, and wall time is not.
    Wall time stays available on the in-memory rows.
    """
    lines = ["# schema=1", ",".join(CSV_COLUMNS)]
    for row in rows:
        disk_row = dict(row, runtime_ms=0)
        lines.append(",".join(_format_value(c, disk_row[c]) for c in CSV_COLUMNS))
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def read_csv(path) -> list[dict]:
    """Read a schema-1 CSV back into row dicts."""
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines or not lines[0].startswith("# schema=1"):
        raise ValueError(f"{path}: missing schema=1 header comment")
    header = lines[1].split(",")
    if tuple(header) != CSV_COLUMNS:
        raise ValueError(f"{path}: unexpected column set {header}")
    rows = []
    for ln in lines[2:]:
        parts = ln.split(",")
        row = {}
        for col, raw in zip(CSV_COLUMNS, parts):
            if col in ("sweep_id", "axis", "method"):
                row[col] = raw
            elif col in ("seed", "d", "k", "T", "n1", "n2", "runtime_ms", "error_flag"):
                row[col] = int(raw)
            else:
                row[col] = float(raw)
        rows.append(row)
    return rows


# ---------------------------------------------------------------------------
# Plain-text config files: [spec] / [sweep] / [methods] sections with
# `key = value` lines.  Unknown keys are errors; booleans are true|false;
# sequences are comma-separated.

_SPEC_KEYS = {
    "d": int, "k": int, "T": int, "n1": int, "n2": int,
    "sigma": float, "c": float,
    "covariance_family": str, "input_dist": str, "track": str,
    "master_seed": int,
}
_SWEEP_KEYS = {
    "axis": str, "values": "seq", "seeds_per_point": int,
    "nu_draws": int, "sweep_id": str, "output": str,
}


def _parse_bool(raw, key):
    if raw == "true":
        return True
    if raw == "false":
        return False
    raise ValueError(f"value of {key!r} must be 'true' or 'false', got {raw!r}")


def parse_config(text: str) -> SweepConfig:
    """Parse the sweep config format; see docs/sweep_example.cfg."""
    section = None
    spec_kwargs: dict = {}
    sweep_kwargs: dict = {}
    methods: list[str] = []
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in ("spec", "sweep", "methods"):
                raise ValueError(f"line {lineno}: unknown section [{section}]")
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, raw = line.partition("=")
        key, raw = key.strip(), raw.strip()
        if section == "spec":
            if key not in _SPEC_KEYS:
                raise ValueError(f"line {lineno}: unknown [spec] key {key!r}")
            spec_kwargs[key] = _SPEC_KEYS[key](raw)
        elif section == "sweep":
            if key not in _SWEEP_KEYS:
                raise ValueError(f"line {lineno}: unknown [sweep] key {key!r}")
            kind = _SWEEP_KEYS[key]
            if kind == "seq":
                sweep_kwargs[key] = tuple(
                    float(v) if "." in v or "e" in v.lower() else int(v)
                    for v in (p.strip() for p in raw.split(","))
                    if v
                )
            else:
                sweep_kwargs[key] = kind(raw)
        elif section == "methods":
            if key not in METHODS:
                raise ValueError(f"line {lineno}: unknown method {key!r}")
            if _parse_bool(raw, key):
                methods.append(key)
        else:
            raise ValueError(f"line {lineno}: key outside any section")

    missing = {"axis", "values", "seeds_per_point"} - set(sweep_kwargs)
    if missing:
        raise ValueError(f"[sweep] section is missing {sorted(missing)}")
    spec = taskgen.EnsembleSpec(**spec_kwargs)
    return SweepConfig(
        base_spec=spec,
        axis=sweep_kwargs["axis"],
        values=tuple(sweep_kwargs["values"]),
        seeds_per_point=sweep_kwargs["seeds_per_point"],
        methods=tuple(sorted(methods)),
        nu_draws=sweep_kwargs.get("nu_draws", 200),
        output_path=sweep_kwargs.get("output"),
        sweep_id=sweep_kwargs.get("sweep_id", "sweep"),
    )


def load_config(path) -> SweepConfig:
    with open(path) as fh:
        return parse_config(fh.read())
