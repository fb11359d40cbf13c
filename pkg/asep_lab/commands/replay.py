"""
replay: re-run one trial by index and stream its events as CSV
"""
import argparse
import json
import sys
from pathlib import Path

from asep_lab.commands.base import OPTIONS, add_option, build_spec, read_config_file
from asep_lab.errors import UsageError
from asep_lab.models.experiment import ExperimentKind, ExperimentSpec
from asep_lab.services.dynamics import EventTraceWriter
from asep_lab.services.error_handler import EXIT_PASS
from asep_lab.services.harness import SPEC_FILE, replay_trial

NAME = "replay"


def register(subparsers) -> argparse.ArgumentParser:
    parser = subparsers.add_parser(NAME, help="re-run one trial and write its event trace",
                                   description="re-run one trial and write its event trace",
                                   allow_abbrev=False)
    parser.add_argument("--kind", choices=[k.value for k in ExperimentKind], default=None,
                        help="experiment the trial belongs to (default: speed, or the --from report's)")
    parser.add_argument("--from", dest="from_dir", default=None,
                        help="report directory whose spec.json supplies the experiment")
    parser.add_argument("--trial", type=int, required=True, help="trial index")
    parser.add_argument("--trace", default="-", help="CSV output path, '-' for stdout")
    parser.add_argument("--config", default=None, help="key=value file of option values; flags win")
    for name in OPTIONS:
        add_option(parser, name)
    parser.set_defaults(handler=run)
    return parser


def _spec(args: argparse.Namespace) -> ExperimentSpec:
    if args.from_dir is None:
        return build_spec(ExperimentKind(args.kind or ExperimentKind.SPEED.value), args)
    spec_path = Path(args.from_dir) / SPEC_FILE
    if not spec_path.is_file():
        raise UsageError(f"{args.from_dir} has no {SPEC_FILE}")
    with open(spec_path, "r", encoding="utf-8") as handle:
        values = json.load(handle)
    if args.kind is not None:
        values["kind"] = args.kind
    if args.config:
        values.update(read_config_file(args.config))
    values.update({name: getattr(args, name) for name in OPTIONS if hasattr(args, name)})
    return ExperimentSpec.from_dict(values).validate()


def run(args: argparse.Namespace) -> int:
    spec = _spec(args)
    if args.trace == "-":
        writer = EventTraceWriter(sys.stdout)
        record = replay_trial(spec, args.trial, observer=writer)
    else:
        with open(args.trace, "w", encoding="utf-8", newline="") as handle:
            writer = EventTraceWriter(handle)
            record = replay_trial(spec, args.trial, observer=writer)
        json.dump({**record.comparable(), "trace": args.trace, "rows": writer.rows}, sys.stdout, indent=2)
        sys.stdout.write("\n")
    return EXIT_PASS
