"""Command-line entry point: experiment subcommands and report summaries.

Subcommands: ``model``, ``eigen``, ``rearrange``, ``flow``, ``schwarz``,
``verify``, ``report``.  Options come from defaults, then an optional flat
``key = value`` config file, then command-line flags (flags win).  Every run
writes deterministic CSV data files plus ``report.jsonl`` (one JSON object per
check); wall-clock metadata goes to a separate ``run_meta.json`` so repeated
runs with the same seed produce byte-identical data.
"""

import argparse
import sys
from dataclasses import fields

from .errors import EigenLabError
from .report import VerificationReport, report_summary
from .suites import ExperimentConfig, parse_config_file, run

_FLOAT_KEYS = {"h", "tol", "kappa", "r", "p", "q", "dt", "t_min", "t_max"}
_INT_KEYS = {"seed", "n", "steps", "t_points", "n_boundary", "n_levels"}
_BOOL_KEYS = {"assume_small"}


def _add_common(parser):
    parser.add_argument("--config", help="flat key = value configuration file")
    parser.add_argument("--out", help="output directory (default: out)")
    parser.add_argument("--seed", type=int, help="random seed recorded in outputs")
    parser.add_argument("--h", type=float, help="target mesh size")
    parser.add_argument("--tol", type=float, help="eigen solver relative tolerance")
    parser.add_argument(
        "--assume-small",
        action="store_true",
        default=None,
        help="record the small-volume hypothesis as assumed (not verified)",
    )


def build_parser():
    parser = argparse.ArgumentParser(
        prog="eigenlab",
        description="first-eigenvalue verification lab on curved plane domains",
    )
    sub = parser.add_subparsers(dest="kind", required=True)

    p = sub.add_parser("model", help="model-space ball quantities and identities")
    p.add_argument("--n", type=int, help="dimension (default 2)")
    p.add_argument("--kappa", type=float, help="curvature parameter (default 0)")
    p.add_argument("--r", type=float, help="ball radius (default 1)")
    p.add_argument("--p", type=float, help="lower exponent for the norm constants")
    p.add_argument("--q", type=float, help="upper exponent for the norm constants")
    _add_common(p)

    p = sub.add_parser("eigen", help="first eigenpair on a plane domain")
    p.add_argument("--shape", help="disk | square | ellipse | geodesic-disk | random | file.csv")
    p.add_argument("--surface", help="euclidean | poincare[:kappa]")
    p.add_argument("--n-boundary", type=int, dest="n_boundary")
    _add_common(p)

    p = sub.add_parser("rearrange", help="rearrangement profile and inequality chain")
    p.add_argument("--shape")
    p.add_argument("--surface")
    p.add_argument("--n-levels", type=int, dest="n_levels")
    p.add_argument("--n-boundary", type=int, dest="n_boundary")
    p.add_argument("--p", type=float)
    p.add_argument("--q", type=float)
    _add_common(p)

    p = sub.add_parser("flow", help="boundary evolution and monotonicity bounds")
    p.add_argument("--shape")
    p.add_argument("--surface")
    p.add_argument("--law", choices=["unit_normal", "curvature"])
    p.add_argument("--steps", type=int)
    p.add_argument("--dt", type=float)
    p.add_argument("--n", type=int, help="n >= 3 switches to the radial closed-form channel")
    p.add_argument("--r", type=float, help="initial radius for the radial channel")
    _add_common(p)

    p = sub.add_parser("schwarz", help="conformal-image eigenvalue comparison")
    p.add_argument("--map", dest="map_spec", help="comma-separated polynomial coefficients")
    p.add_argument("--surface")
    p.add_argument("--t-min", type=float, dest="t_min")
    p.add_argument("--t-max", type=float, dest="t_max")
    p.add_argument("--t-points", type=int, dest="t_points")
    p.add_argument("--n", type=int, help="n >= 3 switches to the Mobius channel")
    p.add_argument("--n-boundary", type=int, dest="n_boundary")
    _add_common(p)

    p = sub.add_parser("verify", help="composite verification suite")
    p.add_argument("--suite", choices=["quick", "all"], help="suite scale (default quick)")
    _add_common(p)

    p = sub.add_parser("report", help="summarize an existing report.jsonl")
    p.add_argument("path", help="path to report.jsonl")
    return parser


def _coerce(key, value):
    if key in _FLOAT_KEYS:
        return float(value)
    if key in _INT_KEYS:
        return int(value)
    if key in _BOOL_KEYS:
        return value in (True, "true", "True", "1", "yes")
    return value


def config_from_args(args):
    values = {}
    if getattr(args, "config", None):
        for key, raw in parse_config_file(args.config).items():
            key = key.replace("-", "_")
            values[key] = _coerce(key, raw)
    valid = {f.name for f in fields(ExperimentConfig)}
    for key, value in vars(args).items():
        if value is None:
            continue
        if key == "map_spec":
            values["map_coefficients"] = tuple(float(c) for c in value.split(","))
            continue
        if key in valid:
            values[key] = value
    unknown = set(values) - valid
    if unknown:
        raise EigenLabError(f"unknown configuration keys: {sorted(unknown)}")
    values["kind"] = args.kind
    return ExperimentConfig(**values)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.kind == "report":
            report = VerificationReport.read_jsonl(args.path)
            sys.stdout.write(report_summary(report))
            return 0 if report.all_passed and report.records else 1
        config = config_from_args(args)
        report = run(config)
        sys.stdout.write(report_summary(report))
        return 0 if report.all_passed else 1
    except (EigenLabError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
