"""Command-line front end and report persistence.

Subcommands: one per experiment kind, plus ``all`` (every kind in
sequence) and ``calibrate <kind>`` (gaussian threshold calibration).
``HYPLAB_SEED`` overrides ``--seed``.  Exit codes: 0 when every executed
experiment passed, 1 on a failed check, 2 on a usage error.

Reports serialize with stable key order and 17-significant-digit floats,
so identical runs produce byte-identical artifacts (wall time is only
included with ``--timing``).
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from .errors import InvalidConfigError
from .experiments import (
    KINDS,
    ExperimentConfig,
    ExperimentReport,
    calibrate,
    run_experiment,
)
from .references import reference_names
from .rng import DistSpec, parse_dist_token

_FORMATS = ("json", "csv")

_DEFAULTS = dict(n=128, trials=1000, seed=42)


# ---------------------------------------------------------------------------
# canonical JSON with fixed float formatting

def _format_scalar(value) -> str:
    if value is None:
        return "null"
    if value is True:
        return "true"
    if value is False:
        return "false"
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value) or math.isinf(value):
            return '"' + repr(value) + '"'
        return format(value, ".17g")
    raise TypeError(f"cannot serialize {type(value)!r}")


def canonical_json(obj, indent: int = 0) -> str:
    """Deterministic JSON: sorted keys, %.17g floats."""
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        parts = [
            f'{inner}"{key}": {canonical_json(obj[key], indent + 1)}'
            for key in sorted(obj)
        ]
        return "{\n" + ",\n".join(parts) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        return "[" + ", ".join(canonical_json(v, indent) for v in obj) + "]"
    return _format_scalar(obj)


# ---------------------------------------------------------------------------
# invocation parsing

class CliInvocation:
    """A validated invocation: the experiment config plus output options."""

    def __init__(self, subcommand, config, out, fmt, timing):
        self.subcommand = subcommand
        self.config = config
        self.out = out
        self.format = fmt
        self.timing = timing


def _positive_int(name):
    def convert(text):
        try:
            value = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} expects an integer, got {text!r}")
        if value < 1:
            raise argparse.ArgumentTypeError(f"{name} must be positive, got {value}")
        return value

    return convert


def _float_list(name):
    def convert(text):
        try:
            return tuple(float(tok) for tok in text.split(","))
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} expects comma-separated numbers, got {text!r}")

    return convert


def _int_list(name):
    def convert(text):
        try:
            return tuple(int(tok) for tok in text.split(","))
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} expects comma-separated integers, got {text!r}")

    return convert


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--n", type=_positive_int("--n"), default=_DEFAULTS["n"],
                        help="matrix dimension (default 128)")
    parser.add_argument("--trials", type=_positive_int("--trials"), default=_DEFAULTS["trials"],
                        help="Monte Carlo trials (default 1000)")
    parser.add_argument("--dist", default="bernoulli",
                        help="entry law token: gaussian|bernoulli[:real|:complex] or custom:<json>")
    parser.add_argument("--field", choices=("real", "complex"), default="real",
                        help="scalar field when --dist has no :field part (default real)")
    parser.add_argument("--seed", type=int, default=_DEFAULTS["seed"],
                        help="master seed (default 42; HYPLAB_SEED overrides)")
    parser.add_argument("--threads", type=_positive_int("--threads"), default=os.cpu_count() or 1,
                        help="worker processes (default: logical core count)")
    parser.add_argument("--out", default="-", help="report path ('-' = stdout; default)")
    parser.add_argument("--format", choices=_FORMATS, default="json", dest="fmt",
                        help="report format (default json)")
    parser.add_argument("--timing", action="store_true",
                        help="include wall time in the report (breaks byte-reproducibility)")
    parser.add_argument("--calibration", default=None,
                        help="calibration file (JSON) for envelope thresholds")
    parser.add_argument("--ks-threshold", type=float, default=None,
                        help="override the kind's default KS threshold")
    parser.add_argument("--universality", action="store_true",
                        help="add a gaussian companion run and two-sample KS checks")
    parser.add_argument("--reference", choices=reference_names(), default=None,
                        help="(informational) reference CDF override for ad-hoc comparisons")
    parser.add_argument("--debug-dump", default=None,
                        help="directory for first-trial matrix/vector CSV dumps")
    # kind-specific knobs (validated per kind)
    parser.add_argument("--m", type=_positive_int("--m"), default=None,
                        help="co-dimension (distance-conc) / row count (neg-second-moment)")
    parser.add_argument("--d", type=_positive_int("--d"), default=4,
                        help="tuple size for normal-coords (default 4)")
    parser.add_argument("--fixed-vector", choices=("e1", "flat", "random"), default="flat",
                        help="fixed unit vector u for inner-product (default flat)")
    parser.add_argument("--eigen-tol", type=float, default=1e-10)
    parser.add_argument("--eigen-max-iter", type=_positive_int("--eigen-max-iter"), default=400)
    parser.add_argument("--t-grid", type=_float_list("--t-grid"), default=(1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 8.0),
                        help="survival grid for upper-tail/hanson-wright")
    parser.add_argument("--bins", type=_positive_int("--bins"), default=40)
    parser.add_argument("--hist-range", type=_float_list("--hist-range"), default=(-4.0, 4.0))
    parser.add_argument("--be-lengths", type=_int_list("--be-lengths"), default=(4, 16, 64, 256))


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hyplab",
        description="Desk-scale experiments on normal vectors of random hyperplanes, "
        "least singular values, and eigenvectors of iid random matrices.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for kind in KINDS:
        kp = sub.add_parser(kind, help=f"run the {kind} experiment")
        _add_common_flags(kp)
    allp = sub.add_parser("all", help="run every experiment kind in sequence")
    _add_common_flags(allp)
    cal = sub.add_parser("calibrate", help="gaussian threshold calibration for one kind")
    cal.add_argument("kind", choices=KINDS)
    _add_common_flags(cal)
    return parser


def _config_from_args(kind: str, args: argparse.Namespace, validate: bool = True) -> ExperimentConfig:
    token = args.dist if (":" in args.dist or args.dist.startswith("custom")) else f"{args.dist}:{args.field}"
    try:
        dist = parse_dist_token(token)
    except (ValueError, OSError) as exc:
        raise InvalidConfigError(f"bad --dist token {args.dist!r}: {exc}") from exc
    seed = args.seed
    env_seed = os.environ.get("HYPLAB_SEED")
    if env_seed is not None:
        try:
            seed = int(env_seed)
        except ValueError:
            raise InvalidConfigError(f"HYPLAB_SEED must be an integer, got {env_seed!r}")
    if len(args.hist_range) != 2:
        raise InvalidConfigError("--hist-range expects lo,hi")
    config = ExperimentConfig(
        kind=kind,
        n=args.n,
        trials=args.trials,
        dist=dist,
        master_seed=seed,
        threads=args.threads,
        m=args.m,
        d=args.d,
        fixed_vector=args.fixed_vector,
        eigen_tol=args.eigen_tol,
        eigen_max_iter=args.eigen_max_iter,
        t_grid=tuple(args.t_grid),
        bins=args.bins,
        hist_range=(args.hist_range[0], args.hist_range[1]),
        be_lengths=tuple(args.be_lengths),
        universality=args.universality,
        ks_threshold=args.ks_threshold,
        reference=args.reference,
        calibration_path=args.calibration,
        debug_dump=args.debug_dump,
    )
    if validate:
        config.validate()
    return config


def parse_invocation(argv: list[str]) -> CliInvocation:
    """Parse and validate argv; exits with code 2 on usage errors."""
    parser = _build_parser()
    args = parser.parse_args(argv)
    sub = args.subcommand
    if sub == "calibrate":
        kind, validate = args.kind, True
    elif sub == "all":
        kind, validate = KINDS[0], False  # each kind re-validates in _run_all
    else:
        kind, validate = sub, True
    try:
        config = _config_from_args(kind, args, validate=validate)
    except InvalidConfigError as exc:
        parser.error(str(exc))  # exits 2
    return CliInvocation(
        subcommand=sub,
        config=config,
        out=args.out,
        fmt=args.fmt,
        timing=args.timing,
    )


def config_to_argv(config: ExperimentConfig) -> list[str]:
    """Canonical flag list reproducing ``config`` (used in report echoes).

    Execution-level details (threads, debug dumps) are not part of the
    canonical invocation.
    """
    argv = [config.kind]
    argv += ["--n", str(config.n), "--trials", str(config.trials)]
    if config.dist.family == "custom":
        argv += ["--dist", "custom:<file>"]
    else:
        argv += ["--dist", config.dist.token()]
    argv += ["--seed", str(config.master_seed)]
    if config.m is not None:
        argv += ["--m", str(config.m)]
    argv += ["--d", str(config.d)]
    argv += ["--fixed-vector", config.fixed_vector]
    argv += ["--eigen-tol", repr(config.eigen_tol)]
    argv += ["--eigen-max-iter", str(config.eigen_max_iter)]
    argv += ["--t-grid=" + ",".join(repr(float(t)) for t in config.t_grid)]
    argv += ["--bins", str(config.bins)]
    # '=' form: the value may start with a dash
    argv += ["--hist-range=" + ",".join(repr(float(v)) for v in config.hist_range)]
    argv += ["--be-lengths", ",".join(str(v) for v in config.be_lengths)]
    if config.universality:
        argv += ["--universality"]
    if config.ks_threshold is not None:
        argv += ["--ks-threshold", repr(config.ks_threshold)]
    if config.reference is not None:
        argv += ["--reference", config.reference]
    if config.calibration_path is not None:
        argv += ["--calibration", config.calibration_path]
    return argv


# ---------------------------------------------------------------------------
# report persistence

def report_payload(report: ExperimentReport, timing: bool = False) -> dict:
    payload = report.to_dict(include_timing=timing)
    payload["argv"] = config_to_argv(report.config)
    return payload


def write_report(report: ExperimentReport, path: str, fmt: str = "json", timing: bool = False) -> None:
    """Persist a report; JSON is a single stable-keyed object, CSV is one
    file per statistic array plus histogram/check tables."""
    if fmt not in _FORMATS:
        raise ValueError(f"unknown format {fmt!r}")
    try:
        if fmt == "json":
            text = canonical_json(report_payload(report, timing)) + "\n"
            if path == "-":
                sys.stdout.write(text)
            else:
                with open(path, "w", encoding="utf-8") as fh:
                    fh.write(text)
        else:
            _write_csv_report(report, path, timing)
    except OSError as exc:
        raise OSError(f"cannot write report to {path!r}: {exc}") from exc


def _write_csv_report(report: ExperimentReport, stem: str, timing: bool) -> None:
    if stem == "-":
        raise ValueError("csv format requires an --out path stem")
    for name, arr in report.per_trial.items():
        with open(f"{stem}.{name}.csv", "w", encoding="utf-8") as fh:
            fh.write(f"{name}\n")
            for value in arr:
                fh.write(format(float(value), ".17g") + "\n")
    for name, hist in report.histograms.items():
        hist.to_csv(f"{stem}.hist_{name}.csv")
    with open(f"{stem}.checks.csv", "w", encoding="utf-8") as fh:
        fh.write("check,value,threshold,op,passed\n")
        for name, entry in sorted(report.ks_results.items()):
            fh.write(
                f"{name},{entry['statistic']:.17g},{entry['threshold']:.17g},<=,{entry['passed']}\n"
            )
        for name, entry in sorted(report.checks.items()):
            if "skipped" in entry:
                fh.write(f"{name},,,skipped,\n")
            else:
                fh.write(
                    f"{name},{entry['value']:.17g},{entry['threshold']:.17g},{entry['op']},{entry['passed']}\n"
                )
        fh.write(f"pass,,,,{report.passed}\n")
    meta = report_payload(report, timing)
    meta.pop("per_trial")
    with open(f"{stem}.report.json", "w", encoding="utf-8") as fh:
        fh.write(canonical_json(meta) + "\n")


# ---------------------------------------------------------------------------
# main

def _progress(message: str) -> None:
    print(message, file=sys.stderr, flush=True)


def _run_single(invocation: CliInvocation) -> int:
    report = run_experiment(invocation.config)
    write_report(report, invocation.out, invocation.format, invocation.timing)
    _progress(
        f"{invocation.config.kind}: n={invocation.config.n} trials={invocation.config.trials} "
        f"pass={report.passed} wall={report.wall_time:.1f}s"
    )
    return 0 if report.passed else 1


def _run_all(invocation: CliInvocation) -> int:
    base = invocation.config
    out_dir = invocation.out
    if out_dir == "-":
        out_dir = "hyplab-reports"
    os.makedirs(out_dir, exist_ok=True)
    calibration_path = base.calibration_path or os.path.join(out_dir, "calibration.json")
    worst = 0
    for kind in KINDS:
        from dataclasses import replace

        config = replace(base, kind=kind, m=None, calibration_path=calibration_path)
        if kind in ("sup-norm", "min-coord", "eigenvector"):
            calibrate(
                kind,
                config.n,
                trials=min(config.trials, 500),
                threads=config.threads,
                fieldname="complex" if kind == "eigenvector" else config.dist.field,
                calibration_path=calibration_path,
            )
            _progress(f"calibrated {kind} at n={config.n}")
        report = run_experiment(config)
        path = os.path.join(out_dir, f"{kind}.{invocation.format}")
        write_report(report, path, invocation.format, invocation.timing)
        _progress(
            f"{kind}: n={config.n} trials={config.trials} pass={report.passed} "
            f"wall={report.wall_time:.1f}s -> {path}"
        )
        worst = max(worst, 0 if report.passed else 1)
    return worst


def _run_calibrate(invocation: CliInvocation, kind: str) -> int:
    config = invocation.config
    path = config.calibration_path or "calibration.json"
    entry = calibrate(
        kind,
        config.n,
        trials=config.trials,
        master_seed=config.master_seed,
        threads=config.threads,
        fieldname="complex" if kind == "eigenvector" else config.dist.field,
        calibration_path=path,
    )
    _progress(f"calibrated {kind} at n={config.n} -> {path}")
    sys.stdout.write(canonical_json(entry) + "\n")
    return 0


def main(argv: list[str] | None = None) -> int:
    invocation = parse_invocation(sys.argv[1:] if argv is None else argv)
    try:
        if invocation.subcommand == "all":
            return _run_all(invocation)
        if invocation.subcommand == "calibrate":
            return _run_calibrate(invocation, invocation.config.kind)
        return _run_single(invocation)
    except InvalidConfigError as exc:
        print(f"hyplab: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"hyplab: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
