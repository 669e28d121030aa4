"""Command-line entry point.

Subcommands: ``gen`` (write a task bundle to an RLB1 container), ``fit``
(one pipeline on one ensemble, print the risk report), ``sweep`` (run a
config-driven sweep to CSV), ``lemmas`` (run a lemma-check suite) and
``report`` (summarize sweep CSVs with scaling-slope fits).

Exit codes: 0 success, 1 invalid input, 2 a lemma suite failed its
acceptance threshold.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import harness, lemmalab, taskgen
from .risk import expected_excess_risk

__all__ = ["cli_dispatch", "main"]

# Suites whose checks are exact algebra: any failed trial fails the suite.
_EXACT_SUITES = {
    "move_x", "loewner", "cov_implies_div", "source_target_identity",
    "norm_theta", "kernel_fixed_design",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


class _UsageError(Exception):
    pass


def _add_spec_args(p):
    p.add_argument("--d", type=int, default=20)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--T", type=int, default=10)
    p.add_argument("--n1", type=int, default=100)
    p.add_argument("--n2", type=int, default=20)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--family", default="identity", choices=taskgen.COVARIANCE_FAMILIES)
    p.add_argument("--input-dist", default="gaussian", choices=taskgen.INPUT_DISTS)
    p.add_argument("--track", default="lowdim", choices=taskgen.TRACKS)
    p.add_argument("--seed", type=int, default=0)


def _spec_from_args(args):
    return taskgen.EnsembleSpec(
        d=args.d, k=args.k, T=args.T, n1=args.n1, n2=args.n2,
        sigma=args.sigma, c=args.c, covariance_family=args.family,
        input_dist=args.input_dist, master_seed=args.seed, track=args.track,
    )


def _build_parser():
    parser = _Parser(prog="replearn", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", help="generate a task bundle and write an RLB1 file")
    _add_spec_args(p_gen)
    p_gen.add_argument("--out", required=True)

    p_fit = sub.add_parser("fit", help="fit one pipeline on one ensemble and print the risk report")
    _add_spec_args(p_fit)
    p_fit.add_argument("--method", required=True, choices=harness.METHODS)
    p_fit.add_argument("--nu-draws", type=int, default=200)

    p_sweep = sub.add_parser("sweep", help="run a config-driven parameter sweep")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--out", required=True)

    p_lem = sub.add_parser("lemmas", help="run a lemma-check suite")
    p_lem.add_argument("--suite", required=True,
                       choices=sorted(lemmalab.ALL_CHECKS) + ["all"])
    p_lem.add_argument("--seed", type=int, default=0)
    p_lem.add_argument("--trials", type=int, default=None)

    p_rep = sub.add_parser("report", help="summarize sweep CSVs with slope fits")
    p_rep.add_argument("--in", dest="in_dir", required=True)
    p_rep.add_argument("--y-field", default="er_mean")
    return parser


def _run_lemma_suite(name, seed, trials):
    check = lemmalab.ALL_CHECKS[name]
    kwargs = {"seed": seed}
    if trials is not None:
        if name == "covariance_concentration":
            kwargs["trials_per_n"] = trials
        else:
            kwargs["trials"] = trials
    outcome = check(**kwargs)
    print(outcome.format_line())
    if name == "covariance_concentration":
        return outcome.calibrated_constant is not None
    if name in _EXACT_SUITES:
        return outcome.pass_fraction == 1.0
    return outcome.pass_fraction >= 0.95


def cli_dispatch(argv) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    try:
        if args.command == "gen":
            spec = _spec_from_args(args)
            _, bundle = taskgen.make_ensemble(spec)
            taskgen.save_bundle(bundle, args.out)
            print(f"wrote {args.out}")
            return 0

        if args.command == "fit":
            spec = _spec_from_args(args)
            if spec.track not in harness._METHOD_TRACKS[args.method]:
                print(f"error: method {args.method!r} does not apply to track "
                      f"{spec.track!r}", file=sys.stderr)
                return 1
            gt, bundle = taskgen.make_ensemble(spec)
            pipeline = harness._build_pipeline(args.method, spec, gt, bundle, spec.master_seed)
            report = expected_excess_risk(pipeline, gt, bundle, args.nu_draws, spec.master_seed)
            for field in ("er_mean", "er_se", "n_draws", "rep_term", "noise_term", "subspace_dist"):
                print(f"{field} = {getattr(report, field)}")
            return 0

        if args.command == "sweep":
            if not os.path.isfile(args.config):
                print(f"error: config file not found: {args.config}", file=sys.stderr)
                return 1
            config = harness.load_config(args.config)
            rows = harness.run_sweep(config)
            os.makedirs(args.out, exist_ok=True)
            out_path = os.path.join(args.out, f"{config.sweep_id}.csv")
            harness.write_csv(rows, out_path)
            print(f"wrote {out_path} ({len(rows)} rows)")
            return 0

        if args.command == "lemmas":
            names = sorted(lemmalab.ALL_CHECKS) if args.suite == "all" else [args.suite]
            ok = all([_run_lemma_suite(n, args.seed, args.trials) for n in names])
            return 0 if ok else 2

        if args.command == "report":
            if not os.path.isdir(args.in_dir):
                print(f"error: not a directory: {args.in_dir}", file=sys.stderr)
                return 1
            csvs = sorted(
                f for f in os.listdir(args.in_dir) if f.endswith(".csv")
            )
            if not csvs:
                print(f"error: no CSV files in {args.in_dir}", file=sys.stderr)
                return 1
            for fname in csvs:
                rows = harness.read_csv(os.path.join(args.in_dir, fname))
                by_method: dict[str, list] = {}
                for row in rows:
                    by_method.setdefault(row["method"], []).append(row)
                for method, sub_rows in sorted(by_method.items()):
                    try:
                        fit = harness.fit_scaling_slope(sub_rows, "axis_value", args.y_field)
                    except ValueError as exc:
                        print(f"{fname} {method}: no slope fit ({exc})")
                        continue
                    print(
                        f"{fname} {method}: slope={fit.slope:.4f} stderr={fit.stderr:.4f} "
                        f"r2={fit.r_squared:.4f} intercept={fit.intercept:.4f}"
                    )
            return 0
    except (ValueError, OSError, taskgen.GenerationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    return 1


def main() -> None:
    sys.exit(cli_dispatch(sys.argv[1:]))
