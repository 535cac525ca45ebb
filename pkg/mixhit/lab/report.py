"""Report emission: per-experiment CSV, JSON and plot-data files plus the run summary."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Iterable

from jinja2 import Environment, FileSystemLoader

from mixhit.applib.config import config
from mixhit.applib.helpers import dump_json, load_json, write_csv
from mixhit.applib.models.lab import ExperimentResult, RunManifest
from mixhit.applib.types import ReportFormat

logger = logging.getLogger(__name__)

RESULTS_FILE = "results.json"
MANIFEST_FILE = "manifest.json"
SUMMARY_FILE = "summary.md"
PLOT_COLUMNS = ["x", "y", "series"]

_TEMPLATES_FOLDER: Path = config.APPDATA_FOLDER_PATH / "templates"


class JinjaEnvironments:
    report = Environment(
        loader=FileSystemLoader(_TEMPLATES_FOLDER / "report"),
        lstrip_blocks=True,
        trim_blocks=True,
    )


def emit_report(result: ExperimentResult, out_dir: str | Path, fmt: ReportFormat | str) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    fmt = ReportFormat(fmt)
    written: list[Path] = []
    match fmt:
        case ReportFormat.CSV:
            for name, table in result.tables.items():
                written.append(write_csv(out_dir / f"{result.stem}-{name}.csv", table.columns, table.rows))
        case ReportFormat.JSON:
            written.append(dump_json(result.model_dump(mode="json"), out_dir / f"{result.stem}.json"))
        case ReportFormat.PLOTDATA:
            for name, points in result.plots.items():
                rows = (p.model_dump() for p in points)
                written.append(write_csv(out_dir / f"{result.stem}-{name}.plot.csv", PLOT_COLUMNS, rows))
    logger.info("wrote %d %s file(s) for %s", len(written), fmt.value, result.stem)
    return written


def save_results(results: Iterable[ExperimentResult], out_dir: str | Path) -> Path:
    return dump_json([r.model_dump(mode="json") for r in results], Path(out_dir) / RESULTS_FILE)


def load_results(run_dir: str | Path) -> list[ExperimentResult]:
    path = Path(run_dir) / RESULTS_FILE
    if not path.exists():
        raise FileNotFoundError(f"{path} not found; is this a run directory?")
    return [ExperimentResult.model_validate(r) for r in load_json(path)]


def render_summary(manifest: RunManifest, results: list[ExperimentResult], out_dir: str | Path) -> Path:
    template = JinjaEnvironments.report.get_template("summary.md.j2")
    path = Path(out_dir) / SUMMARY_FILE
    path.write_text(template.render(manifest=manifest, results=results))
    return path
