"""
Report directories: records, summary, curve, config echo, Markdown summary
"""
import csv
import json
from pathlib import Path
from typing import Dict, List, Optional, Union

import structlog
from jinja2 import Environment, FileSystemLoader

from asep_lab.errors import AsepLabError, SchemaVersionError
from asep_lab.models.experiment import SCHEMA_VERSION, ExperimentSpec, Report
from asep_lab.services.harness import RECORDS_FILE, SPEC_FILE, load_records
from asep_lab.utils import spec_to_config

logger = structlog.get_logger(__name__)

SUMMARY_FILE = "summary.json"
CURVE_FILE = "curve.csv"
CONFIG_FILE = "config.env"
MARKDOWN_FILE = "summary.md"

TEMPLATES_DIR = Path(__file__).resolve().parent.parent / "templates"
_templates = Environment(loader=FileSystemLoader(str(TEMPLATES_DIR)), keep_trailing_newline=True,
                         trim_blocks=True, lstrip_blocks=True)

PathLike = Union[str, Path]


def _curve_columns(curve: List[Dict[str, float]]) -> List[str]:
    columns = ["s", "empirical_cdf", "theoretical_cdf"]
    if "fitted_cdf" in curve[0]:
        columns.append("fitted_cdf")
    return columns


def emit_plot_data(report: Report, path: PathLike) -> Path:
    """CDF curve as CSV: s ascending, then the empirical, theoretical and (fit-alpha) fitted CDFs"""
    if not report.curve:
        raise AsepLabError(f"{report.spec.kind.value} report carries no CDF curve")
    path = Path(path)
    columns = _curve_columns(report.curve)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(columns)
        for row in report.curve:
            writer.writerow([repr(float(row[c])) for c in columns])
    return path


def _read_curve(path: Path) -> List[Dict[str, float]]:
    with open(path, "r", encoding="utf-8", newline="") as handle:
        return [{k: float(v) for k, v in row.items()} for row in csv.DictReader(handle)]


def render_markdown(report: Report) -> str:
    template = _templates.get_template("report.md.j2")
    return template.render(report=report, spec=report.spec, aggregates=report.aggregates)


def persist_report(report: Report, path: PathLike) -> Path:
    """Write a complete report directory; records.jsonl is rewritten in trial order"""
    directory = Path(path)
    directory.mkdir(parents=True, exist_ok=True)

    with open(directory / RECORDS_FILE, "w", encoding="utf-8") as handle:
        for record in sorted(report.records, key=lambda r: r.trial_index):
            handle.write(json.dumps(record.to_dict()) + "\n")
    with open(directory / SPEC_FILE, "w", encoding="utf-8") as handle:
        json.dump(report.spec.to_dict(), handle, indent=2)
    with open(directory / SUMMARY_FILE, "w", encoding="utf-8") as handle:
        json.dump(report.summary(), handle, indent=2)
    with open(directory / CONFIG_FILE, "w", encoding="utf-8") as handle:
        handle.write(spec_to_config(report.spec))
    with open(directory / MARKDOWN_FILE, "w", encoding="utf-8") as handle:
        handle.write(render_markdown(report))
    curve_path = directory / CURVE_FILE
    if report.curve:
        emit_plot_data(report, curve_path)
    else:
        curve_path.unlink(missing_ok=True)

    logger.info("report_persisted", path=str(directory), experiment=report.spec.kind.value, passed=report.passed)
    return directory


def load_report(path: PathLike) -> Report:
    directory = Path(path)
    with open(directory / SUMMARY_FILE, "r", encoding="utf-8") as handle:
        summary = json.load(handle)
    version = summary.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaVersionError(f"{directory} has schema version {version}, expected {SCHEMA_VERSION}")

    records = load_records(directory / RECORDS_FILE)
    if len(records) != summary["n_records"]:
        raise AsepLabError(f"{directory} lists {summary['n_records']} records, found {len(records)}")
    curve_path = directory / CURVE_FILE
    curve: Optional[List[Dict[str, float]]] = _read_curve(curve_path) if curve_path.exists() else None
    return Report(
        spec=ExperimentSpec.from_dict(summary["spec"]),
        records=records,
        aggregates=summary["aggregates"],
        passed=summary["passed"],
        curve=curve,
        schema_version=version,
    )
