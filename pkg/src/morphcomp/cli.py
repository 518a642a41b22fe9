"""Command line entry point: run, gradcheck, and init subcommands.

Exit codes: 0 success, 1 configuration problem, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import os
import sys

from .config import (ConfigError, RunConfig, parse_config, serialize_config,
                     validate_config)
from .driver import gradient_check, run_optimization

GRADCHECK_TOL = 1e-3


def _load_config(path: str | None) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        with open(path, "rb") as handle:
            raw = handle.read()
    except OSError as err:
        raise ConfigError(f"cannot read config file {path!r}: "
                          f"{err.strerror or err}") from err
    return parse_config(raw)


def _cmd_run(args) -> int:
    config = _load_config(args.config)
    components, records, opt = run_optimization(
        config, output_dir=args.output_dir,
        max_iterations=args.max_iterations)
    out = args.output_dir if args.output_dir is not None \
        else config.output_directory
    last = records[-1]
    print(f"problem: {config.problem}")
    print(f"n_design_variables: {opt.n_design_variables_}")
    print(f"iterations: {opt.n_iterations_}")
    print(f"converged: {'yes' if opt.converged_ else 'no'}")
    print(f"compliance: {last.compliance:.6g}")
    print(f"volume_fraction: {last.volume_fraction:.6g}")
    print(f"output directory: {out}")
    return 0


def _cmd_gradcheck(args) -> int:
    config = _load_config(args.config)
    err_compliance, err_volume = gradient_check(config)
    print(f"compliance gradient max relative error: {err_compliance:.3e}")
    print(f"volume gradient max relative error: {err_volume:.3e}")
    if err_compliance <= GRADCHECK_TOL and err_volume <= GRADCHECK_TOL:
        print("gradient check passed")
        return 0
    print("gradient check FAILED")
    return 2


def _cmd_init(args) -> int:
    config = validate_config(RunConfig(problem=args.problem))
    path = args.output or f"{args.problem}.conf"
    if os.path.exists(path) and not args.force:
        print(f"refusing to overwrite existing file {path!r} "
              "(use --force)", file=sys.stderr)
        return 1
    try:
        with open(path, "w", encoding="utf-8", newline="") as handle:
            handle.write(serialize_config(config))
    except OSError as err:
        raise ConfigError(f"cannot write config file {path!r}: "
                          f"{err.strerror or err}") from err
    print(f"wrote default config for problem '{args.problem}' to {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="morphcomp",
        description="Compliance minimization with movable rectangular "
                    "components on a fixed analysis grid.")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser(
        "run", help="optimize a layout and write artifacts")
    run_p.add_argument("config", nargs="?", default=None,
                       help="config file; built-in defaults when omitted")
    run_p.add_argument("--output-dir", default=None,
                       help="override the configured output directory")
    run_p.add_argument("--max-iterations", type=int, default=None,
                       help="override the configured iteration budget")

    gc_p = sub.add_parser(
        "gradcheck",
        help="compare analytic and finite-difference gradients")
    gc_p.add_argument("config", nargs="?", default=None,
                      help="config file; built-in defaults when omitted")

    init_p = sub.add_parser(
        "init", help="write a default config for a named problem")
    init_p.add_argument("problem", nargs="?", default="short_beam_a",
                        help="short_beam_a, short_beam_b, mbb or custom "
                             "(default: short_beam_a)")
    init_p.add_argument("--output", default=None, metavar="PATH",
                        help="destination file (default: <problem>.conf)")
    init_p.add_argument("--force", action="store_true",
                        help="overwrite an existing file")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {"run": _cmd_run, "gradcheck": _cmd_gradcheck,
                "init": _cmd_init}
    try:
        return handlers[args.command](args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 1
    except RuntimeError as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
