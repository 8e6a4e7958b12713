"""
lfd CLI - Linear Factor Diagnostics.

Usage:
    lfd diagnose <moment-file|->                     Diagnose every date of a panel
    lfd fixture example3 [--continuation] [--params a1,a2,a3,b1,b2,b3,rho]
    lfd generate --spec <file> --dates K [--seed S] [--as-moments]
    lfd verify-prop7 [--spec <file>] [--trials T] [--seed S]
    lfd config                                       Print the default configuration

fixture three-asset and verify-spanning are accepted as aliases.

Exit codes:
    0  success
    1  data error (unreadable or invalid input, failed precondition)
    2  usage error
    3  implication graph violated or GLS-type verification failed
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Any

from linfac import __version__
from linfac.config import ConfigError, RunConfig, load_config
from linfac.io.report import EXIT_DATA_ERROR, EXIT_USAGE

FIXTURE_NAMES = ["example3", "three-asset"]


class LFDError(Exception):
    """A data error reported to the user with exit status 1."""

    pass


class UsageError(Exception):
    """A usage error reported to the user with exit status 2."""

    pass


def _params(text: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",")]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from e
    if len(values) != 7:
        raise argparse.ArgumentTypeError(f"expected 7 values a1,a2,a3,b1,b2,b3,rho, got {len(values)}")
    return values


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from e
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol-rank", type=float, help="Relative rank tolerance (default 1e-10)")
    common.add_argument("--tol-residual", type=float, help="Residual tolerance (default 1e-8)")
    common.add_argument("--format", choices=["json", "text"], help="Report format (default json)")
    common.add_argument("--strict", action="store_true", default=None, help="Abort on the first data error")
    common.add_argument("--workers", type=int, help="Threads used to process dates")
    common.add_argument("--seed", type=int, help="Random seed, echoed into reports")
    common.add_argument("--config", type=Path, help="TOML file with a [linfac] table")
    common.add_argument("--out", type=Path, help="Write output here instead of stdout")
    common.add_argument("-v", "--verbose", action="store_true", help="Verbose logging to stderr")
    return common


def create_parser() -> argparse.ArgumentParser:
    """Create the argument parser with one subparser per command."""
    parser = argparse.ArgumentParser(
        prog="lfd",
        description="Linear factor diagnostics for conditional factor models",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = _common_options()
    commands = parser.add_subparsers(dest="command", metavar="command")
    commands.required = True

    diagnose = commands.add_parser("diagnose", parents=[common], help="Diagnose a moment file")
    diagnose.add_argument("file", help="Moment file, or - for standard input")

    fixture = commands.add_parser("fixture", parents=[common], help="Emit a fixture as a moment file")
    fixture.add_argument("name", choices=FIXTURE_NAMES, help="Fixture name")
    fixture.add_argument("--continuation", action="store_true", help="Use continuation parameters")
    fixture.add_argument("--params", type=_params, help="a1,a2,a3,b1,b2,b3,rho")

    generate = commands.add_parser("generate", parents=[common], help="Simulate a generative spec")
    generate.add_argument("--spec", required=True, help="Generative spec file, or - for standard input")
    generate.add_argument("--dates", type=_positive_int, required=True, help="Number of dates")
    generate.add_argument(
        "--as-moments",
        action="store_true",
        help="Emit a moment file with the spec on every date instead of simulated returns",
    )

    verify = commands.add_parser(
        "verify-prop7",
        aliases=["verify-spanning"],
        parents=[common],
        help="Verify the GLS-type spanning construction",
    )
    verify.add_argument("--spec", help="Generative spec file; random specs when omitted")
    verify.add_argument("--trials", type=_positive_int, default=200, help="Random specs to draw (default 200)")

    commands.add_parser("config", parents=[common], help="Print the default configuration")
    return parser


def run_config(args: Any) -> RunConfig:
    """
    Resolve the run configuration from --config, the environment and flags.

    Raises:
        UsageError: If any source holds an invalid value
    """
    overrides = {
        "rel_rank_tol": args.tol_rank,
        "abs_residual_tol": args.tol_residual,
        "output_format": args.format,
        "strict": args.strict,
        "workers": args.workers,
        "seed": args.seed,
    }
    try:
        return load_config(args.config, overrides=overrides)
    except ConfigError as e:
        raise UsageError(str(e)) from e


def emit(text: str, args: Any) -> None:
    """Write command output to --out or stdout."""
    if args.out is None:
        sys.stdout.write(text)
        return
    try:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(text, encoding="utf-8")
    except OSError as e:
        raise LFDError(f"cannot write {args.out}: {e}") from e


def _setup_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def main(argv: list[str] | None = None) -> int:
    """Main entry point for the lfd CLI."""
    parser = create_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE

    _setup_logging(args.verbose)
    try:
        if args.command == "diagnose":
            from lfd.commands.diagnose import diagnose_command

            return diagnose_command(args)

        elif args.command == "fixture":
            from lfd.commands.fixture import fixture_command

            return fixture_command(args)

        elif args.command == "generate":
            from lfd.commands.generate import generate_command

            return generate_command(args)

        elif args.command in ("verify-prop7", "verify-spanning"):
            from lfd.commands.verify import verify_command

            return verify_command(args)

        elif args.command == "config":
            from lfd.commands.config import config_command

            return config_command(args)

    except UsageError as e:
        parser.print_usage(sys.stderr)
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except LFDError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_DATA_ERROR
    except KeyboardInterrupt:
        print("\nInterrupted", file=sys.stderr)
        return 130
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
