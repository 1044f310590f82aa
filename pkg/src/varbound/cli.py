"""Command line entry point: ``varbound fit|diagnose|compare-samplers|selftest|plot``.

Exit codes: 0 success, 1 domain error, 2 usage error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import checks
from .base_dist import StandardizedBase
from .data import FORMATS, load_dataset
from .diagnostics import COMPARE_COLUMNS, DIAG_COLUMNS, DIAG_SAMPLERS, compare_samplers, diagnose, format_rows, read_rows
from .optimizer import OPT_SAMPLERS, NonFiniteGradientError, OptConfig, resolve_step_size, run
from .plot import render_svg
from .targets import GlmTarget
from .trace import read_trace, write_trace

log = logging.getLogger("varbound")

# option name -> (type, default); None-valued CLI flags fall back to the
# config file, then to these defaults
TARGET_OPTIONS = {
    "data": (str, None),
    "format": (str, "csv"),
    "model": (str, "linear"),
    "sigma2": (float, 1.0),
    "rho2": (float, 4.0),
    "base": (str, "gaussian"),
    "add_intercept": (bool, False),
    "standardize": (bool, False),
    "n_features": (int, None),
}
FIT_OPTIONS = {
    "seed": (int, 0),
    "iterations": (int, 2000),
    "step_size": (float, None),
    "grad_samples": (int, 1000),
    "sampler": (str, "batch"),
    "snapshot_every": (int, 20),
    "elbo_samples": (int, 1000),
}
DIAG_OPTIONS = {
    "seed": (int, None),
    "mc_samples": (int, 10_000),
    "workers": (int, 1),
}


class UsageError(Exception):
    pass


def _to_bool(text):
    if isinstance(text, bool):
        return text
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off", ""):
        return False
    raise UsageError(f"cannot interpret {text!r} as a boolean")


def _convert(kind, value):
    if value is None or value == "None":
        return None
    if kind is bool:
        return _to_bool(value)
    try:
        return kind(value)
    except ValueError:
        raise UsageError(f"invalid value {value!r}") from None


def read_config_file(path) -> dict:
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def resolve(args, table, fallback=None) -> dict:
    """Merge CLI flags over the config file over ``fallback`` over defaults."""
    file_cfg = read_config_file(args.config) if getattr(args, "config", None) else {}
    fallback = fallback or {}
    out = {}
    for name, (kind, default) in table.items():
        cli_value = getattr(args, name, None)
        if cli_value is not None:
            out[name] = _convert(kind, cli_value)
        elif name in file_cfg:
            out[name] = _convert(kind, file_cfg[name])
        elif name in fallback:
            out[name] = _convert(kind, fallback[name])
        else:
            out[name] = default
    return out


def build_target(cfg):
    if not cfg["data"]:
        raise UsageError("a dataset path is required (--data)")
    if cfg["format"] not in FORMATS:
        raise UsageError(f"--format must be one of {FORMATS}")
    if cfg["model"] not in ("linear", "logistic"):
        raise UsageError("--model must be linear or logistic")
    data = load_dataset(
        cfg["data"],
        cfg["format"],
        classification=cfg["model"] == "logistic",
        add_intercept=cfg["add_intercept"],
        standardize=cfg["standardize"],
        n_features=cfg["n_features"],
    )
    return GlmTarget(cfg["model"], data, cfg["sigma2"], cfg["rho2"])


def parse_base(text):
    try:
        return StandardizedBase.parse(text)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_fit(args) -> int:
    cfg = resolve(args, {**TARGET_OPTIONS, **FIT_OPTIONS})
    if cfg["sampler"] not in OPT_SAMPLERS:
        raise UsageError(f"--sampler must be one of {OPT_SAMPLERS}")
    base = parse_base(cfg["base"])
    target = build_target(cfg)
    opt = OptConfig(
        iterations=cfg["iterations"],
        step_size=cfg["step_size"],
        grad_samples=cfg["grad_samples"],
        sampler=cfg["sampler"],
        seed=cfg["seed"],
        snapshot_every=cfg["snapshot_every"],
        elbo_samples=cfg["elbo_samples"],
    )
    header = {k: cfg[k] for k in TARGET_OPTIONS}
    header.update({k: cfg[k] for k in FIT_OPTIONS})
    header["base"] = base.label()
    header["step_size"] = repr(resolve_step_size(target, opt))
    try:
        trace = run(target, base, opt)
    except NonFiniteGradientError as exc:
        write_trace(args.out, header, exc.trace)
        raise
    write_trace(args.out, header, trace)
    log.info("wrote %d snapshots to %s", len(trace), args.out)
    return 0


def _diagnostic_inputs(args):
    header, records = read_trace(args.trace)
    cfg = resolve(args, TARGET_OPTIONS, fallback=header)
    for key in ("model", "sigma2", "rho2"):
        if key in header and _convert(TARGET_OPTIONS[key][0], header[key]) != cfg[key]:
            raise ValueError(f"trace/config model mismatch: trace has {key}={header[key]}, config has {cfg[key]}")
    diag = resolve(args, DIAG_OPTIONS, fallback={"seed": header.get("seed", 0)})
    base = parse_base(cfg["base"])
    target = build_target(cfg)
    if records[0].w.d != target.d:
        raise ValueError(f"trace/config model mismatch: trace has d={records[0].w.d}, dataset has d={target.d}")
    samplers = tuple(s.strip() for s in args.samplers.split(",") if s.strip())
    for s in samplers:
        if s not in DIAG_SAMPLERS:
            raise UsageError(f"unknown sampler {s!r}; expected a subset of {DIAG_SAMPLERS}")
    return target, base, records, samplers, diag


def cmd_diagnose(args) -> int:
    target, base, records, samplers, diag = _diagnostic_inputs(args)
    rows = diagnose(target, base, records, samplers, diag["mc_samples"], diag["seed"] or 0, diag["workers"])
    Path(args.out).write_text(format_rows(rows, DIAG_COLUMNS))
    return 0


def cmd_compare_samplers(args) -> int:
    target, base, records, samplers, diag = _diagnostic_inputs(args)
    rows = compare_samplers(target, base, records, samplers, diag["mc_samples"], diag["seed"] or 0, diag["workers"])
    Path(args.out).write_text(format_rows(rows, COMPARE_COLUMNS))
    return 0


def cmd_selftest(args) -> int:
    results = []
    for fn in checks.run_all(quick=args.quick, lazy=True):
        res = fn()
        results.append(res)
        if not args.json:
            print(res.line(), flush=True)
    passed = all(r.passed for r in results)
    summary = {
        "passed": passed,
        "checks": [
            {"name": r.name, "passed": r.passed, "seconds": round(r.seconds, 3), "detail": r.detail} for r in results
        ],
    }
    if args.json:
        print(json.dumps(summary, indent=2, default=float))
    else:
        print(f"{sum(r.passed for r in results)}/{len(results)} checks passed")
    return 0 if passed else 1


def cmd_plot(args) -> int:
    rows = read_rows(args.csv)
    columns = [c.strip() for c in args.columns.split(",") if c.strip()]
    Path(args.out).write_text(render_svg(rows, columns, x_col=args.x))
    return 0


def _add_target_flags(p):
    p.add_argument("--config", help="key=value file; command-line flags take precedence")
    p.add_argument("--data", help="dataset path")
    p.add_argument("--format", choices=FORMATS)
    p.add_argument("--model", choices=("linear", "logistic"))
    p.add_argument("--sigma2", type=float, help="prior variance (default 1.0)")
    p.add_argument("--rho2", type=float, help="noise variance for linear regression (default 4.0)")
    p.add_argument("--base", help="gaussian | uniform | student-t:<dof>")
    p.add_argument("--add-intercept", action="store_const", const=True, default=None)
    p.add_argument("--standardize", action="store_const", const=True, default=None)
    p.add_argument("--n-features", type=int, help="feature count for libsvm input")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="varbound", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="run proximal SGD and write a trace file")
    _add_target_flags(p)
    p.add_argument("--seed", type=int)
    p.add_argument("--iterations", type=int)
    p.add_argument("--step-size", type=float, help="default 1/M with M the scalar smoothness constant")
    p.add_argument("--grad-samples", type=int)
    p.add_argument("--sampler", choices=OPT_SAMPLERS)
    p.add_argument("--snapshot-every", type=int)
    p.add_argument("--elbo-samples", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit)

    for name, func, default_samplers, helptext in (
        ("diagnose", cmd_diagnose, "batch,uniform", "empirical ESN and bounds at every snapshot"),
        ("compare-samplers", cmd_compare_samplers, ",".join(DIAG_SAMPLERS), "final-snapshot sampler table"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--trace", required=True)
        _add_target_flags(p)
        p.add_argument("--samplers", default=default_samplers)
        p.add_argument("--mc-samples", type=int)
        p.add_argument("--seed", type=int, help="defaults to the trace's seed")
        p.add_argument("--workers", type=int)
        p.add_argument("--out", required=True)
        p.set_defaults(func=func)

    p = sub.add_parser("selftest", help="run the invariant suite")
    p.add_argument("--quick", action="store_true", help="reduced Monte Carlo budgets")
    p.add_argument("--json", action="store_true", help="print only a JSON summary")
    p.set_defaults(func=cmd_selftest)

    p = sub.add_parser("plot", help="log-scale SVG line chart of CSV columns")
    p.add_argument("--csv", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--columns", default="esn_empirical,bound_scalar,bound_matrix")
    p.add_argument("--x", default="iteration")
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"varbound: usage error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError, OSError, IndexError) as exc:
        print(f"varbound: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
