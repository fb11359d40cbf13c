"""
Command-line entry point
"""
import argparse
import sys
from typing import Optional, Sequence

from asep_lab import __version__
from asep_lab.commands import alpha_sweep, block, coupling_audit, fit_alpha, identity, replay, speed
from asep_lab.config import get_settings
from asep_lab.errors import AsepLabError
from asep_lab.services.error_handler import EXIT_INTERRUPTED, EXIT_USAGE, error_handler, exit_code_for, setup_logging

EXPERIMENT_COMMANDS = (
    speed.command,
    coupling_audit.command,
    identity.command,
    block.command,
    fit_alpha.command,
    alpha_sweep.command,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="asep_lab",
        description="Monte Carlo experiments for exclusion processes with second-class particles",
        allow_abbrev=False,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", metavar="command")
    subparsers.required = True

    # Register commands
    for command in EXPERIMENT_COMMANDS:
        command.register(subparsers)
    replay.register(subparsers)
    return parser


def parse_and_run(argv: Optional[Sequence[str]] = None) -> int:
    """Run one subcommand; returns the process exit code instead of raising"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits on --help/--version (0) and on usage errors (2)
        return e.code if isinstance(e.code, int) else EXIT_USAGE

    try:
        return args.handler(args)
    except AsepLabError as e:
        error_id = error_handler.log_error(e, command=args.command)
        print(f"asep_lab {args.command}: {e} (error id {error_id})", file=sys.stderr)
        return exit_code_for(e)
    except KeyboardInterrupt:
        print(f"asep_lab {args.command}: interrupted", file=sys.stderr)
        return EXIT_INTERRUPTED
    except Exception as e:
        error_id = error_handler.log_error(e, command=args.command)
        print(f"asep_lab {args.command}: unexpected {type(e).__name__}: {e} (error id {error_id})", file=sys.stderr)
        return exit_code_for(e)


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        settings = get_settings()
    except AsepLabError as e:
        print(f"asep_lab: {e}", file=sys.stderr)
        return exit_code_for(e)
    setup_logging(settings.log_level, settings.log_format)
    return parse_and_run(argv)
