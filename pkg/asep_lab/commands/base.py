"""
Shared plumbing for the experiment subcommands: the option table, config-file merging and the
run/persist/report cycle every experiment goes through.
"""
import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Sequence, Tuple

from dotenv import dotenv_values

from asep_lab.config import get_settings
from asep_lab.errors import UsageError
from asep_lab.models.experiment import ExperimentKind, ExperimentSpec, Report
from asep_lab.services.error_handler import EXIT_CRITERION_FAILED, EXIT_PASS
from asep_lab.services.persistence import CURVE_FILE, persist_report
from asep_lab.utils import (
    parse_bool, parse_float_list, parse_int_list, parse_optional_float, parse_range, parse_s_grid,
)

Runner = Callable[..., Report]


@dataclass(frozen=True)
class Option:
    flags: Tuple[str, ...]
    type: Callable[[str], Any]
    help: str
    is_flag: bool = False


# spec field -> command-line option
OPTIONS: Dict[str, Option] = {
    "p": Option(("--p",), float, "right-jump probability, in (1/2, 1]"),
    "L": Option(("--L",), int, "number of second-class particles minus one"),
    "t": Option(("--t",), float, "time horizon"),
    "n_trials": Option(("--n-trials", "--n"), int, "number of trials (per side or per p value where relevant)"),
    "master_seed": Option(("--master-seed", "--seed"), int, "master seed, 0 <= seed < 2**64"),
    "initial_data": Option(("--initial-data",), str, "two_species | single_second_class | coupled"),
    "vacate_origin": Option(("--vacate-origin",), parse_bool,
                            "leave site 0 empty in single-second-class initial data", is_flag=True),
    "safety": Option(("--safety",), float, "window safety factor (>= 1)"),
    "s_grid": Option(("--s-grid",), parse_s_grid, "CDF grid as lo,hi,steps (write --s-grid=-1,1,201)"),
    "identity_I": Option(("--I",), parse_int_list, "sites that must be occupied, comma separated"),
    "identity_J": Option(("--J",), parse_int_list, "offsets/colors, comma separated, all >= 1"),
    "identity_P": Option(("--P",), int, "reference position"),
    "block_s": Option(("--s",), float, "block velocity s, |s| <= gamma"),
    "t_grid": Option(("--t-grid",), parse_float_list, "observation times, comma separated"),
    "p_grid": Option(("--p-grid",), parse_float_list, "p values to sweep, comma separated"),
    "audit_stride": Option(("--audit-stride",), int, "full-window scan every N events (0 disables)"),
    "ks_threshold": Option(("--ks-threshold",), float, "pass if the KS distance is at most this"),
    "median_tolerance": Option(("--median-tolerance",), parse_optional_float,
                               "also require |median - analytic median| <= this"),
    "z_threshold": Option(("--z-threshold",), float, "pass if z is at most this"),
    "block_tolerance": Option(("--block-tolerance",), float, "pass if |estimate - target| is at most this"),
    "alpha_range": Option(("--alpha-range",), parse_range, "pass if the fitted alpha lies in lo,hi"),
}

# config-file keys: spec field names or long flags without the dashes
ALIASES: Dict[str, str] = {name: name for name in OPTIONS}
ALIASES.update({
    flag.lstrip("-").replace("-", "_"): name
    for name, option in OPTIONS.items()
    for flag in option.flags
})

COMMON_FIELDS = ("p", "L", "t", "n_trials", "master_seed", "safety")

KIND_DEFAULTS: Dict[ExperimentKind, Dict[str, Any]] = {
    ExperimentKind.FIT_ALPHA: {"initial_data": "single_second_class"},
    ExperimentKind.ALPHA_SWEEP: {"initial_data": "single_second_class"},
}


def add_option(parser: argparse.ArgumentParser, name: str) -> None:
    option = OPTIONS[name]
    if option.is_flag:
        parser.add_argument(*option.flags, dest=name, action="store_true", default=argparse.SUPPRESS,
                            help=option.help)
    else:
        parser.add_argument(*option.flags, dest=name, type=option.type, default=argparse.SUPPRESS,
                            help=option.help)


def add_run_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--workers", type=int, default=None,
                        help="worker processes (default: ASEP_LAB_WORKERS or the CPU count)")
    parser.add_argument("--output-dir", default=None,
                        help="report directory (default: $ASEP_LAB_OUTPUT_DIR/<command>)")
    parser.add_argument("--config", default=None, help="key=value file of option values; flags win")


def read_config_file(path: str) -> Dict[str, Any]:
    """Parse a flat key=value file into spec field values"""
    config_path = Path(path)
    if not config_path.is_file():
        raise UsageError(f"config file {path} not found")
    values: Dict[str, Any] = {}
    for key, raw in dotenv_values(config_path).items():
        name = ALIASES.get(key.strip().lstrip("-").replace("-", "_"))
        if name is None:
            raise UsageError(f"unknown key {key!r} in {path}")
        try:
            values[name] = OPTIONS[name].type(raw or "")
        except (argparse.ArgumentTypeError, ValueError) as e:
            raise UsageError(f"{path}: bad value for {key}: {e}")
    return values


def build_spec(kind: ExperimentKind, args: argparse.Namespace) -> ExperimentSpec:
    """Defaults < config file < flags, validated before anything runs"""
    values: Dict[str, Any] = {"safety": get_settings().safety}
    values.update(KIND_DEFAULTS.get(kind, {}))
    if getattr(args, "config", None):
        values.update(read_config_file(args.config))
    values.update({name: getattr(args, name) for name in OPTIONS if hasattr(args, name)})
    return ExperimentSpec(kind=kind, **values).validate()


def output_dir_for(name: str, args: argparse.Namespace) -> Path:
    return Path(args.output_dir) if args.output_dir else Path(get_settings().output_dir) / name


@dataclass
class ExperimentCommand:
    name: str
    kind: ExperimentKind
    help: str
    fields: Sequence[str]
    runner: Runner
    epilog: Optional[str] = None

    def register(self, subparsers) -> argparse.ArgumentParser:
        parser = subparsers.add_parser(self.name, help=self.help, description=self.help, epilog=self.epilog,
                                       allow_abbrev=False)
        for name in tuple(COMMON_FIELDS) + tuple(self.fields):
            add_option(parser, name)
        add_run_options(parser)
        parser.add_argument("--resume", action="store_true",
                            help="keep records already in the output directory and run only the missing trials")
        parser.set_defaults(handler=self.run)
        return parser

    def run(self, args: argparse.Namespace) -> int:
        spec = build_spec(self.kind, args)
        directory = output_dir_for(self.name, args)
        report = self.runner(spec, workers=args.workers, output_dir=directory, resume=args.resume)
        persist_report(report, directory)
        print_summary(report, directory)
        return EXIT_PASS if report.passed else EXIT_CRITERION_FAILED


def print_summary(report: Report, directory: Path) -> None:
    summary = {
        "experiment": report.spec.kind.value,
        "passed": report.passed,
        "output_dir": str(directory),
        "aggregates": report.aggregates,
    }
    if report.curve:
        summary["plot_data"] = str(directory / CURVE_FILE)
    json.dump(summary, sys.stdout, indent=2)
    sys.stdout.write("\n")
