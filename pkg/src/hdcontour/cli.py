"""
Command-line interface.

Subcommands ``fit``, ``contour``, ``design-conditions``, ``diagnose`` and
``run`` each execute the pipeline up to the named stage; ``synth`` writes a
synthetic dataset. Settings come from ``--config`` (YAML) and are overridden
by explicit flags.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import __version__
from .config import ConfigError, RunConfig, load_config, make_config
from .core import HdContourError
from .io import write_csv
from .pipeline import EXIT_INPUT, EXIT_OK, EXIT_USAGE, STAGES, run_pipeline
from .synth import generate_synthetic


def _floats(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _step(text):
    vals = _floats(text)
    if len(vals) == 1:
        return (vals[0], vals[0])
    if len(vals) == 2:
        return tuple(vals)
    raise argparse.ArgumentTypeError("grid step takes one value or 'hs_step,v_step'")


def _columns(text):
    out = {}
    for part in text.split(","):
        key, sep, name = part.partition("=")
        if not sep or key.strip() not in ("time", "hs", "v"):
            raise argparse.ArgumentTypeError("columns take the form hs=NAME,v=NAME[,time=NAME]")
        out[key.strip()] = name.strip()
    return out


# flag -> (config key, argparse kwargs)
_PIPELINE_FLAGS = {
    "--method": ("method", {"choices": ["kde", "cma", "both"]}),
    "--return-periods": ("return_periods", {"type": _floats, "metavar": "T1,T2,..."}),
    "--state-duration": ("state_duration_hours", {"type": float, "metavar": "HOURS"}),
    "--bandwidth-factor": ("bandwidth_factor", {"type": float}),
    "--bandwidth-exponent": ("bandwidth_exponent", {"type": float}),
    "--grid-step": ("grid_step", {"type": _step, "metavar": "STEP[,STEP]"}),
    "--padding": ("padding_bandwidths", {"type": float, "metavar": "BANDWIDTHS"}),
    "--bin-width": ("cma_bin_width", {"type": float}),
    "--min-bin-count": ("cma_min_bin_count", {"type": int}),
    "--angles": ("angles", {"type": _floats, "metavar": "DEG,DEG,..."}),
    "--frame": ("frame_normalization", {"choices": ["extent", "std"]}),
    "--columns": ("columns", {"type": _columns, "metavar": "hs=NAME,v=NAME,time=NAME"}),
    "--output-dir": ("output_dir", {"metavar": "DIR"}),
    "--seed": ("seed", {"type": int}),
    "--n": ("synthetic_n", {"type": int, "metavar": "N"}),
}
_PIPELINE_SWITCHES = {
    "--synthetic": ("synthetic", True),
    "--skip-invalid": ("skip_invalid", True),
    "--strict-grid": ("strict_grid", True),
    "--refine-cma": ("cma_refine", True),
    "--write-density": ("write_density", True),
    "--no-plots": ("write_plots", False),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hdcontour",
        description="Highest-density environmental contours of significant wave height and wind speed.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    helps = {
        "fit": "fit the density and dump the grid",
        "contour": "compute contours for each return period",
        "design-conditions": "contours plus extreme design conditions",
        "diagnose": "contours plus exceedance diagnostics",
        "run": "full pipeline including plots",
    }
    for name in STAGES:
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("input", nargs="?", help="CSV with hs_m and v_ms columns (time optional)")
        p.add_argument("--config", help="YAML file of run settings")
        p.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)
        for flag, (key, kwargs) in _PIPELINE_FLAGS.items():
            flags = (flag, "-o") if flag == "--output-dir" else (flag,)
            p.add_argument(*flags, dest=key, default=None, **kwargs)
        for flag, (key, value) in _PIPELINE_SWITCHES.items():
            p.add_argument(flag, dest=key, action="store_const", const=value, default=None)

    p = sub.add_parser("synth", help="write a synthetic dataset")
    p.add_argument("--n", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--state-duration", type=float, default=1.0)
    p.add_argument("-o", "--out", required=True, help="output CSV path")
    return parser


def _config_from_args(args) -> RunConfig:
    overrides = {}
    for key, _ in list(_PIPELINE_FLAGS.values()) + list(_PIPELINE_SWITCHES.values()):
        value = getattr(args, key)
        if value is not None:
            overrides[key] = value
    if args.input is not None:
        overrides["input"] = args.input
    if args.config:
        return load_config(args.config, overrides)
    return make_config(**overrides)


def _emit_error(kind, message, code):
    print(json.dumps({"error": kind, "message": message, "exit_code": code}), file=sys.stderr)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")

    if args.command == "synth":
        try:
            ds = generate_synthetic(args.n, args.seed, state_duration_hours=args.state_duration)
            write_csv(ds, args.out)
        except (HdContourError, OSError) as exc:
            _emit_error(type(exc).__name__, str(exc), EXIT_INPUT)
            return EXIT_INPUT
        return EXIT_OK

    try:
        config = _config_from_args(args)
    except ConfigError as exc:
        _emit_error("ConfigError", str(exc), EXIT_USAGE)
        return EXIT_USAGE

    summary = run_pipeline(config, args.command)
    for err in summary.errors:
        print(json.dumps(err, sort_keys=True, default=str), file=sys.stderr)
    if args.verbose:
        for path in summary.files:
            print(path)
    return summary.exit_code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
