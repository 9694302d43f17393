"""Command line entry point.

Three subcommands::

    fracphase constants --a -0.5
    fracphase kappa --a -0.5 --T 8,16,32,64
    fracphase sweep --experiment boundary --a -0.5 --eps 0.2,0.1,0.05

Every option may also come from ``--config FILE``, a flat ``key = value``
text file using the long option names (``eps = 0.2, 0.1``). Explicit flags
win over the file. Reports go to stdout unless ``--out`` is given.

Field files written by ``Field2D.save`` start with the header line
``# field2d x_lo=<x> x_hi=<x> nx=<n> periodic=<0|1>`` followed by one row
per y node: the y value and then the ``nx`` field values.

Exit codes: 0 success, 2 invalid input, 3 a solver hit its iteration cap.
"""
from __future__ import annotations

import argparse
import sys

from .experiments import EXPERIMENTS, ConvergenceError, ExperimentConfig, Report, emit, run
from .params import make_params
from .profile import kappa_s_report
from .special import D_s_constant

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NOT_CONVERGED = 3

# option name -> parser for values read from a config file
_CONFIG_KEYS = {
    "experiment": str,
    "a": float,
    "eps": str,
    "T": str,
    "grid": int,
    "seed": int,
    "format": str,
    "out": str,
    "well": str,
    "well_lo": float,
    "well_hi": float,
    "potential": str,
    "potential_lo": float,
    "potential_hi": float,
    "jumps": int,
    "r": float,
    "gamma": float,
}


class CLIError(ValueError):
    pass


def _float_list(text: str) -> tuple[float, ...]:
    parts = [p for p in text.replace(",", " ").split() if p]
    try:
        return tuple(float(p) for p in parts)
    except ValueError as exc:
        raise CLIError(f"not a number list: {text!r}") from exc


def read_config(path) -> dict:
    out = {}
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise CLIError(f"cannot read config {path}: {exc}") from exc
    for num, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CLIError(f"{path}:{num}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _CONFIG_KEYS:
            raise CLIError(f"{path}:{num}: unknown key {key!r}")
        try:
            out[key] = _CONFIG_KEYS[key](value)
        except ValueError as exc:
            raise CLIError(f"{path}:{num}: bad value for {key}: {value!r}") from exc
    return out


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value file with default options")
    p.add_argument("--a", type=float, help="weight exponent in (-1, 0)")
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), help="report format (default csv)")
    p.add_argument("--seed", type=int, help="recorded in the report; runs are deterministic")
    p.add_argument("--grid", type=int, help="resolution (nodes per unit length or per layer width)")
    p.add_argument("--potential", help="'quartic', 'quartic01' or a two-column table file for V")
    p.add_argument("--potential-lo", dest="potential_lo", type=float)
    p.add_argument("--potential-hi", dest="potential_hi", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fracphase", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("constants", help="d_s, e_s and the trace constant D_s")
    _common(p)

    p = sub.add_parser("kappa", help="optimal-profile constant kappa_s and its truncations")
    _common(p)
    p.add_argument("--T", help="comma separated truncation lengths (default 8,16,32,64)")

    p = sub.add_parser("sweep", help="epsilon sweep for one limit statement")
    _common(p)
    p.add_argument("--experiment", help="one of " + ", ".join(EXPERIMENTS))
    p.add_argument("--eps", help="comma separated, strictly decreasing")
    p.add_argument("--T", help="truncation lengths for the optimal profile")
    p.add_argument("--well", help="'quartic', 'quartic01' or a two-column table file for W")
    p.add_argument("--well-lo", dest="well_lo", type=float)
    p.add_argument("--well-hi", dest="well_hi", type=float)
    p.add_argument("--jumps", type=int, help="number of transitions (0, 1 or 2)")
    p.add_argument("--r", type=float, help="distance to the boundary in the interior sweep")
    p.add_argument("--gamma", type=float, help="wall trace value in the wall sweep")
    return parser


def _merge(args: argparse.Namespace) -> dict:
    opts = read_config(args.config) if args.config else {}
    for key, value in vars(args).items():
        if key in ("config", "command") or value is None:
            continue
        opts[key] = value
    return opts


def _config(command: str, opts: dict) -> ExperimentConfig:
    kw = {"experiment": opts.get("experiment", "boundary" if command == "kappa" else None)}
    if command == "sweep" and kw["experiment"] is None:
        raise CLIError("--experiment is required; valid tags: " + ", ".join(EXPERIMENTS))
    if "eps" in opts:
        kw["eps_list"] = _float_list(opts["eps"])
        if not kw["eps_list"]:
            raise CLIError("eps list is empty")
    if "T" in opts:
        kw["T"] = _float_list(opts["T"])
    for key in ("a", "grid", "seed", "well", "well_lo", "well_hi", "potential", "potential_lo", "potential_hi", "jumps", "r", "gamma"):
        if key in opts:
            kw[key] = opts[key]
    return ExperimentConfig(**kw)


def execute(argv=None) -> tuple[Report, dict]:
    args = build_parser().parse_args(argv)
    opts = _merge(args)
    command = args.command
    if command == "constants":
        p = make_params(opts.get("a", -0.5))
        rep = D_s_constant(p.s)
        return Report("constants", {"a": p.a, "seed": opts.get("seed", 0)}, payload=rep.to_dict()), opts
    cfg = _config(command, opts)
    if command == "kappa":
        krep = kappa_s_report(cfg.params, cfg.V, D_s_constant(cfg.params.s).D_s, Ts=cfg.T, nodes_per_unit=cfg.grid)
        config = {k: v for k, v in cfg.to_dict().items() if k in ("a", "T", "grid", "potential", "potential_lo", "potential_hi", "seed")}
        return Report("kappa", config, payload=krep.to_dict(), converged=krep.converged), opts
    return run(cfg), opts


def main(argv=None) -> int:
    try:
        report, opts = execute(argv)
        text = emit(report, opts.get("out"), opts.get("format", "csv"))
    except ConvergenceError as exc:
        print(f"fracphase: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except (ValueError, OSError) as exc:
        print(f"fracphase: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if opts.get("out") in (None, "-"):
        sys.stdout.write(text)
    if not report.converged:
        print("fracphase: solver hit its iteration cap", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
