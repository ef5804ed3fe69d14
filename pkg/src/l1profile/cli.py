"""Command-line interface: ``l1profile fit|calibrate|screen|simulate|reproduce-table1``.

Exit status: 0 clean, 1 outliers flagged by ``screen``, 2 invalid input,
3 a numerical procedure failed.
"""
from __future__ import annotations

import argparse
import math
import os
import sys

from .errors import FitError, ValidationError
from .kernels import KERNEL_CODES
from .phase1 import FitConfig, fit, load_model, save_model
from .profiles import emit_profiles, parse_profiles, parse_wide
from .screening import (METHODS, STATISTICS, calibrate_limits, load_limits,
                        phase1_chart_csv, save_limits, screen)
from .synthetic import ERROR_KINDS, Contamination, generate, pseudo_vdp_spec

EXIT_OK, EXIT_OUTLIERS, EXIT_INPUT, EXIT_FIT = 0, 1, 2, 3


def _positive(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not (v > 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return v


def _count(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1: {text!r}")
    return v


def _print_config(command, args):
    print(f"# l1profile {command}", file=sys.stderr)
    for key, value in sorted(vars(args).items()):
        if key not in ("command", "handler"):
            print(f"#   {key} = {value}", file=sys.stderr)


def _read_profiles(path, fmt):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc
    return parse_wide(text) if fmt == "wide" else parse_profiles(text)


def _write(path, text):
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise ValidationError(f"cannot write {path}: {exc}") from exc


def _chart_prefix(args, default_from):
    if args.chart_prefix:
        return args.chart_prefix
    return os.path.splitext(default_from)[0] + "_chart"


def cmd_fit(args) -> int:
    config = FitConfig(kernel=args.kernel, bandwidth_mu=args.bandwidth_mu,
                       bandwidth_s=args.bandwidth_s, uneven_locations=args.uneven_locations,
                       loo_scores=args.loo_scores, residual_at=args.residual_at)
    pset = _read_profiles(args.input, args.input_format)
    model = fit(pset, config)
    try:
        save_model(model, args.output)
    except OSError as exc:
        raise ValidationError(f"cannot write {args.output}: {exc}") from exc
    cs = model.center_stats
    print(f"profiles={len(pset)} points={pset.n_points}")
    print(f"b_n={model.b_n!r} h_n={model.h_n!r}")
    print(f"mu_delta={cs.mu_delta!r} s_delta={cs.s_delta!r}")
    print(f"model written to {args.output}")
    return EXIT_OK


def cmd_calibrate(args) -> int:
    if not 0 < args.alpha0 <= 1:
        raise ValidationError(f"alpha0 must lie in (0, 1], got {args.alpha0!r}")
    model = load_model(args.model)
    phase1 = _read_profiles(args.input, args.input_format) if args.input else None
    if args.refit and phase1 is None:
        raise ValidationError("--refit needs --input with the Phase I profiles")
    limits = calibrate_limits(model, args.alpha0, args.method, args.reps, args.seed,
                              args.refit, phase1)
    save_limits(limits, args.output)
    prefix = _chart_prefix(args, args.output)
    for stat in STATISTICS:
        _write(f"{prefix}_{stat}.csv", phase1_chart_csv(model, limits, stat))
    print(f"alpha_star={limits.alpha_star!r}")
    print(f"limits c0={limits.c0!r} c1={limits.c1!r} c2={limits.c2!r}")
    print(f"limits written to {args.output}; charts {prefix}_{{D,T1,T2}}.csv")
    return EXIT_OK


def cmd_screen(args) -> int:
    model = load_model(args.model)
    limits = load_limits(args.limits)
    report = screen(_read_profiles(args.input, args.input_format), model, limits)
    if args.output:
        _write(args.output, report.to_csv())
        prefix = _chart_prefix(args, args.output)
        for stat in STATISTICS:
            _write(f"{prefix}_{stat}.csv", report.chart_csv(stat))
    else:
        sys.stdout.write(report.to_csv())
    out = sys.stdout if args.output else sys.stderr
    print(f"screened={len(report.rows)} outliers={report.n_outliers}", file=out)
    for pid in report.outlier_ids:
        print(f"outlier {pid}", file=out)
    return EXIT_OUTLIERS if report.n_outliers else EXIT_OK


def _contamination(args) -> Contamination:
    if args.contamination == "none":
        return Contamination()
    if args.amplitude is None:
        raise ValidationError("--amplitude is required with --contamination")
    if args.contamination == "sine":
        return Contamination.sine(args.amplitude)
    return Contamination.spike(args.amplitude, args.spike_center, args.spike_width,
                               args.spike_spread)


def cmd_simulate(args) -> int:
    spec = pseudo_vdp_spec(args.error_kind, args.seed, _contamination(args))
    if args.sigma is not None:
        spec = spec.with_(sigma=args.sigma)
    if args.sigma_delta is not None:
        spec = spec.with_(sigma_delta=args.sigma_delta)
    pset = generate(spec, args.n, args.stream, args.id_prefix)
    comments = [f"stream={args.stream}"] + spec.to_config()
    _write(args.output, emit_profiles(pset, comments))
    print(f"{len(pset)} profiles at {len(spec.locations)} locations written to {args.output}")
    return EXIT_OK


def cmd_reproduce_table1(args) -> int:
    from .study import reproduce_table1

    config = FitConfig(kernel=args.kernel, bandwidth_mu=args.bandwidth_mu,
                       bandwidth_s=args.bandwidth_s)
    result = reproduce_table1(args.seed, args.n_phase1, args.n_phase2, args.alpha0,
                              args.method, args.reps, config, log=print)
    print(result.format_table())
    print(f"elapsed {result.seconds:.1f} s")
    if args.output:
        _write(args.output, result.to_csv())
    return EXIT_OK


def _add_input(p, required=True):
    p.add_argument("--input", required=required, help="profiles CSV")
    p.add_argument("--input-format", choices=("long", "wide"), default="long",
                   help="long: profile_id,x,y rows; wide: x column then one column per profile")


def _add_fit_options(p):
    p.add_argument("--bandwidth-mu", type=_positive, help="fix b_n instead of cross-validating")
    p.add_argument("--bandwidth-s", type=_positive, help="fix h_n instead of cross-validating")
    p.add_argument("--kernel", choices=sorted(KERNEL_CODES), default="epanechnikov")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="l1profile", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit reference and deviation curves to Phase I profiles")
    _add_input(p)
    p.add_argument("--output", "--model", dest="output", required=True, help="model file to write")
    _add_fit_options(p)
    p.add_argument("--uneven-locations", action="store_true",
                   help="weight profile centers by the density of measurement locations")
    p.add_argument("--loo-scores", action="store_true",
                   help="score each Phase I profile against a fit without it")
    p.add_argument("--residual-at", choices=("data", "target"), default="data")
    p.set_defaults(handler=cmd_fit)

    p = sub.add_parser("calibrate", help="calibrate control limits on a fitted model")
    p.add_argument("--model", required=True)
    p.add_argument("--alpha0", type=float, required=True, help="overall false-alarm level")
    p.add_argument("--method", choices=METHODS, default="empirical")
    p.add_argument("--reps", type=_count, default=1000, help="bootstrap resamples")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--refit", action="store_true", help="refit the model on each bootstrap resample")
    _add_input(p, required=False)
    p.add_argument("--output", "--limits", dest="output", required=True, help="limits file to write")
    p.add_argument("--chart-prefix", help="prefix for the Phase I chart CSVs")
    p.set_defaults(handler=cmd_calibrate)

    p = sub.add_parser("screen", help="screen profiles against calibrated limits")
    p.add_argument("--model", required=True)
    p.add_argument("--limits", required=True)
    _add_input(p)
    p.add_argument("--output", help="report CSV (default: standard output)")
    p.add_argument("--chart-prefix", help="prefix for the per-statistic chart CSVs")
    p.set_defaults(handler=cmd_screen)

    p = sub.add_parser("simulate", help="generate synthetic VDP-like profiles")
    p.add_argument("--n", type=_count, default=100, help="number of profiles")
    p.add_argument("--error-kind", choices=ERROR_KINDS, default="gaussian")
    p.add_argument("--sigma", type=float, help="override the error scale")
    p.add_argument("--sigma-delta", type=float, help="override the center spread")
    p.add_argument("--contamination", choices=("none", "sine", "spike"), default="none")
    p.add_argument("--amplitude", type=float, help="A for sine, B for spike")
    p.add_argument("--spike-center", type=float, default=0.3)
    p.add_argument("--spike-width", type=_positive, default=0.005)
    p.add_argument("--spike-spread", type=_positive, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stream", type=int, default=0, help="independent stream index for the same seed")
    p.add_argument("--id-prefix", default="P")
    p.add_argument("--output", required=True)
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("reproduce-table1", help="run the synthetic detection-rate study")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--alpha0", type=float, default=0.05)
    p.add_argument("--method", choices=METHODS, default="empirical")
    p.add_argument("--reps", type=_count, default=1000)
    p.add_argument("--n-phase1", type=_count, default=100)
    p.add_argument("--n-phase2", type=_count, default=100)
    _add_fit_options(p)
    p.add_argument("--output", help="CSV summary to write")
    p.set_defaults(handler=cmd_reproduce_table1)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    _print_config(args.command, args)
    try:
        return args.handler(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except FitError as exc:
        print(f"fit error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FIT


if __name__ == "__main__":
    sys.exit(main())
