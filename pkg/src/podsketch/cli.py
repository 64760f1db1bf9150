"""Command-line interface.

Subcommands:

* ``convert`` — CSV (or PODM) in, PODM out, optional row-mean centering.
* ``run`` — execute one of the algorithms on a PODM matrix and emit a JSON
  report (optionally CSV tables, figures, and the factor itself).
* ``compare`` — angles / error measure between a reference and a factor.
* ``plot`` — re-render figures and CSV tables from a saved report.

Exit codes: 0 success, 2 parameter error, 3 input format error,
4 degenerate sampling distribution.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import jsonschema
import numpy as np

from . import podio, reporting
from .baselines import ctsvd, ltsvd
from .errors import DegenerateDistributionError, FormatError, ParameterError
from .isma import CRITERIA, STRATEGIES, IsmaConfig, isma_run
from .matcore import dense_svd, mean_center_rows, pod_via_gram
from .merge import mat_flops_estimate
from .ooc import BlockReader, incremental_pod, pass_count
from .quality import mode_angles, principal_angles, wedin_measure
from .sampling import column_norm_distribution, ctsvd_sample_count, ltsvd_sample_count

ALGORITHMS = ("gram", "ltsvd", "ctsvd", "isma", "incremental")


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="podsketch",
        description="Dominant POD modes of dense matrices via iterative "
        "column/row sampling and merge-and-truncate updates.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", help="convert a matrix to the PODM format")
    p.add_argument("input", help="input file")
    p.add_argument(
        "--format",
        choices=("csv", "podm"),
        default=None,
        help="input format (default: guessed from the extension)",
    )
    p.add_argument("--center", action="store_true", help="subtract each row's mean")
    p.add_argument("--out", default=None, help="output path (default: input + .podm)")

    p = sub.add_parser("run", help="run an algorithm and write a report")
    p.add_argument("algorithm", choices=ALGORITHMS)
    p.add_argument("matrix", help="PODM input matrix")
    p.add_argument("--k", type=int, required=True, help="number of modes")
    p.add_argument("--r", type=int, default=None, help="merge rank (default 3k)")
    p.add_argument("--epsilon", type=float, default=0.7)
    p.add_argument("--delta", type=float, default=0.6)
    p.add_argument("--tau", type=float, default=0.99)
    p.add_argument("--strategy", choices=STRATEGIES, default="unf")
    p.add_argument("--rows", action="store_true", help="sample rows as well")
    p.add_argument("--criterion", choices=CRITERIA, default="modes")
    p.add_argument("--seed", type=int, default=None, help="RNG seed (fallback: env PODSKETCH_SEED, then 0)")
    p.add_argument("--blocks", type=int, default=4, help="block count for incremental runs")
    p.add_argument("--reference", default=None, help="PODM matrix or PODF factor to compare against")
    p.add_argument("--finalize", action=argparse.BooleanOptionalAction, default=True, help="recompute sigma and V from the converged basis")
    p.add_argument("--threads", type=int, default=1, help="BLAS thread cap (default 1)")
    p.add_argument("--c", type=int, default=None, help="override the per-round column draw count")
    p.add_argument("--w", type=int, default=None, help="override the per-round row draw count")
    p.add_argument("--out", default=None, help="report path (default: stdout)")
    p.add_argument("--save-factor", default=None, help="also persist the factor as PODF")
    p.add_argument("--plots", action="store_true", help="render figures and CSV tables next to --out")

    p = sub.add_parser("compare", help="compare a factor against a reference")
    p.add_argument("reference", help="PODM matrix or PODF factor treated as exact")
    p.add_argument("subject", help="PODF factor under test")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--out", default=None, help="report path (default: stdout)")
    p.add_argument("--plots", action="store_true")

    p = sub.add_parser("plot", help="render figures from a saved report")
    p.add_argument("report", help="report JSON file")
    p.add_argument("--out-dir", default=None, help="directory for outputs (default: next to the report)")
    return parser


def _resolve_seed(arg_seed):
    if arg_seed is not None:
        return int(arg_seed)
    env = os.environ.get("PODSKETCH_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ParameterError(f"PODSKETCH_SEED must be an integer, got {env!r}")
    return 0


def _load_reference(path):
    """Load a reference as (exact_factor, matrix_or_None).

    PODF files hold a factor directly; PODM matrices are factored exactly
    with a dense SVD.  The formats share their magic, so extension first,
    then content, decides.
    """
    if path.endswith(".podf"):
        return podio.read_factor(path), None
    if path.endswith(".podm"):
        mat = podio.read_matrix(path)
        return dense_svd(mat), mat
    try:
        return podio.read_factor(path), None
    except FormatError:
        mat = podio.read_matrix(path)
        return dense_svd(mat), mat


def cmd_convert(args):
    fmt = args.format
    if fmt is None:
        fmt = "podm" if args.input.endswith(".podm") else "csv"
    if fmt == "csv":
        a = podio.read_csv_matrix(args.input)
    else:
        a = podio.read_matrix(args.input)
    if args.center:
        a = mean_center_rows(a)
    out = args.out if args.out else args.input + ".podm"
    podio.write_matrix(out, a)
    m, n = a.shape
    print(f"{m} {n} {float(np.linalg.norm(a))!r}")
    return 0


def _run_algorithm(args, a, seed):
    """Dispatch one algorithm; returns (factor, traces, passes)."""
    m, n = a.shape
    k = args.k
    if k < 1 or k > min(m, n):
        raise ParameterError(f"k={k} outside 1..min(m, n)={min(m, n)}")
    want_wedin = args.reference is not None and args.algorithm in ("gram", "isma")
    if args.algorithm == "gram":
        keep = min(k + 1, min(m, n)) if want_wedin else k
        return pod_via_gram(a, keep), [], 1
    if args.algorithm == "ltsvd":
        c = args.c if args.c else ltsvd_sample_count(k, args.epsilon, args.delta)
        dist = column_norm_distribution(a)
        rng = np.random.default_rng(seed)
        return ltsvd(a, dist, k, c, rng, dedup=True), [], 1
    if args.algorithm == "ctsvd":
        cw = ctsvd_sample_count(k, args.epsilon, args.delta)
        c = args.c if args.c else cw
        w = args.w if args.w else cw
        dist = column_norm_distribution(a)
        rng = np.random.default_rng(seed)
        return ctsvd(a, dist, k, c, w, args.epsilon, rng, dedup=True), [], 1
    cfg = IsmaConfig(
        k=k,
        r=args.r,
        epsilon=args.epsilon,
        delta=args.delta,
        tau=args.tau,
        strategy=args.strategy,
        rows=args.rows,
        criterion=args.criterion,
        seed=seed,
        finalize=args.finalize,
        c=args.c,
        w=args.w,
    )
    if args.algorithm == "isma":
        keep = k
        if want_wedin and args.finalize and k + 1 <= cfg.r:
            keep = k + 1
        factor, traces = isma_run(a, cfg, keep=keep)
        return factor, traces, pass_count("full", cfg.rows, len(traces))
    # incremental: one pass by construction; finalize never applies.
    with BlockReader(args.matrix, args.blocks) as reader:
        factor, traces = incremental_pod(reader, cfg)
    return factor, traces, pass_count("incremental", cfg.rows, len(traces))


def cmd_run(args):
    import threadpoolctl

    a = podio.read_matrix(args.matrix)
    seed = _resolve_seed(args.seed)
    wall0, cpu0 = time.perf_counter(), time.process_time()
    with threadpoolctl.threadpool_limits(limits=max(1, args.threads)):
        factor, traces, passes = _run_algorithm(args, a, seed)
    wall, cpu = time.perf_counter() - wall0, time.process_time() - cpu0

    k = args.k
    report = {
        "config": {
            "algorithm": args.algorithm,
            "k": k,
            "r": args.r if args.algorithm in ("isma", "incremental") else None,
            "epsilon": args.epsilon,
            "delta": args.delta,
            "tau": args.tau,
            "strategy": args.strategy if args.algorithm in ("isma", "incremental") else None,
            "rows": bool(args.rows),
            "criterion": args.criterion if args.algorithm in ("isma", "incremental") else None,
            "seed": seed,
            "finalize": bool(args.finalize) and args.algorithm != "incremental",
            "blocks": args.blocks if args.algorithm == "incremental" else None,
            "threads": max(1, args.threads),
            "c": args.c,
            "w": args.w,
            "input": os.path.basename(args.matrix),
            "reference": os.path.basename(args.reference) if args.reference else None,
        },
        "sigma": [float(s) for s in factor.sigma[:k]],
        "traces": reporting.traces_to_json(traces),
        "timing": {
            "wall_s": wall,
            "cpu_s": cpu,
            "flops_estimate": mat_flops_estimate(
                a.shape[0],
                a.shape[1],
                args.blocks if args.algorithm == "incremental" else 1,
            ),
        },
        "passes": passes,
    }

    if args.reference is not None:
        exact, _ref_mat = _load_reference(args.reference)
        if exact.nmodes < k:
            raise ParameterError(
                f"reference has {exact.nmodes} modes, need at least k={k}"
            )
        if factor.nmodes < k:
            raise ParameterError(
                f"computed factor has {factor.nmodes} modes, need k={k} to compare"
            )
        report["angles"] = {
            "mode_degrees": [float(x) for x in mode_angles(exact, factor, k)],
            "principal_degrees": [float(x) for x in principal_angles(exact, factor, k)],
        }
        if factor.v is not None and factor.nmodes >= k + 1:
            report["wedin"] = reporting.wedin_to_json(wedin_measure(a, factor, k))

    if args.save_factor:
        podio.write_factor(args.save_factor, factor)
    _emit(report, args.out, getattr(args, "plots", False))
    return 0


def cmd_compare(args):
    exact, ref_mat = _load_reference(args.reference)
    subject = podio.read_factor(args.subject)
    k = args.k
    if k < 1:
        raise ParameterError("k must be >= 1")
    report = {
        "config": {
            "algorithm": "compare",
            "k": k,
            "input": os.path.basename(args.subject),
            "reference": os.path.basename(args.reference),
        },
        "sigma": [float(s) for s in subject.sigma[:k]],
        "traces": [],
        "angles": {
            "mode_degrees": [float(x) for x in mode_angles(exact, subject, k)],
            "principal_degrees": [float(x) for x in principal_angles(exact, subject, k)],
        },
        "timing": {"wall_s": 0.0, "cpu_s": 0.0},
        "passes": 0,
    }
    if ref_mat is not None and subject.v is not None and subject.nmodes >= k + 1:
        report["wedin"] = reporting.wedin_to_json(wedin_measure(ref_mat, subject, k))
    _emit(report, args.out, args.plots)
    return 0


def cmd_plot(args):
    with open(args.report, encoding="utf-8") as f:
        try:
            report = json.load(f)
        except json.JSONDecodeError as exc:
            raise FormatError(f"not a JSON report: {exc}") from None
    try:
        reporting.validate_report(report)
    except jsonschema.ValidationError as exc:
        raise FormatError(f"not a valid report: {exc.message}") from None
    out_dir = args.out_dir if args.out_dir else os.path.dirname(args.report) or "."
    os.makedirs(out_dir, exist_ok=True)
    stem = os.path.join(
        out_dir, os.path.splitext(os.path.basename(args.report))[0]
    )
    paths = reporting.write_delimited(report, stem)
    paths += reporting.render_plots(report, stem)
    for p in paths:
        print(p)
    return 0


def _emit(report, out, plots):
    text = reporting.dump_report(report)
    if out:
        with open(out, "w", encoding="utf-8") as f:
            f.write(text)
        if plots:
            stem = os.path.splitext(out)[0]
            reporting.write_delimited(report, stem)
            reporting.render_plots(report, stem)
    else:
        sys.stdout.write(text)


def main(argv=None):
    args = _build_parser().parse_args(argv)
    handlers = {
        "convert": cmd_convert,
        "run": cmd_run,
        "compare": cmd_compare,
        "plot": cmd_plot,
    }
    try:
        return handlers[args.command](args)
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except DegenerateDistributionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
