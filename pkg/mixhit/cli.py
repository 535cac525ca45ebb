"""
Command-line entry point.

  mixhit analyze <kernel-file> --alpha A --epsilon E
  mixhit zoo list | mixhit zoo build <spec> [--out FILE]
  mixhit run <config.toml> [--seed S] --out DIR
  mixhit report <run-dir> --format csv|json|plotdata

Exit codes: 0 success, 1 an experiment raised, 2 config or input error,
3 an inequality audit failed.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from mixhit import __version__
from mixhit.applib.errors import MixhitError
from mixhit.applib.helpers import format_cell
from mixhit.applib.logconfig import configure_logging
from mixhit.applib.models.results import EquivalenceReport
from mixhit.applib.types import ReportFormat
from mixhit.kernels.core import dump_kernel, kernel_to_text, load_kernel
from mixhit.kernels.times import DEFAULT_T_MAX, equivalence_report
from mixhit.lab.report import emit_report, load_results
from mixhit.lab.runner import run_experiment
from mixhit.lab.zoo import build_zoo_chain, default_zoo, parse_zoo_spec, validate_zoo_spec

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_EXPERIMENT_FAILED = 1
EXIT_CONFIG = 2
EXIT_AUDIT = 3


def _analyze(args: argparse.Namespace) -> int:
    kernel = load_kernel(args.kernel_file)
    chain_id = Path(args.kernel_file).stem
    reports = [
        equivalence_report(kernel, alpha, args.epsilon, chain_id=chain_id, t_max=args.t_max)
        for alpha in args.alpha
    ]
    if args.json:
        print(json.dumps([r.model_dump(mode="json") for r in reports], indent=2))
        return EXIT_OK
    writer = csv.DictWriter(sys.stdout, fieldnames=EquivalenceReport.CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for r in reports:
        writer.writerow({k: format_cell(v) for k, v in r.csv_row().items()})
    return EXIT_OK


def _zoo(args: argparse.Namespace) -> int:
    if args.zoo_cmd == "list":
        for spec in default_zoo():
            kernel, _ = build_zoo_chain(spec)
            print(f"{spec.chain_id}\t{kernel.n}")
        return EXIT_OK

    spec = parse_zoo_spec(args.spec)
    validate_zoo_spec(spec)
    kernel, _ = build_zoo_chain(spec)
    if args.out:
        path = dump_kernel(kernel, args.out)
        logger.info("wrote %s (%d states) to %s", spec.chain_id, kernel.n, path)
    else:
        sys.stdout.write(kernel_to_text(kernel))
    return EXIT_OK


def _run(args: argparse.Namespace) -> int:
    manifest = run_experiment(args.config, out_dir=args.out, seed=args.seed)
    if manifest.audit_failed:
        failed = [o.name.value for o in manifest.outputs if o.audit_failures]
        logger.error("inequality audit failed in: %s", ", ".join(failed))
        return EXIT_AUDIT
    if not all(o.ok for o in manifest.outputs):
        return EXIT_EXPERIMENT_FAILED
    return EXIT_OK


def _report(args: argparse.Namespace) -> int:
    out_dir = Path(args.out) if args.out else Path(args.run_dir)
    for result in load_results(args.run_dir):
        for path in emit_report(result, out_dir, args.format):
            print(path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mixhit", description="Mixing and hitting times of Markov chains")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", help="Overrides MIXHIT_LOG_LEVEL")

    sub = parser.add_subparsers(dest="cmd", required=True)

    p_analyze = sub.add_parser("analyze", help="Equivalence report for a kernel file (.json or text matrix)")
    p_analyze.add_argument("kernel_file")
    p_analyze.add_argument("--alpha", type=float, action="append", help="Repeat for several alphas (default 0.25)")
    p_analyze.add_argument("--epsilon", type=float, default=0.25)
    p_analyze.add_argument("--t-max", type=int, default=DEFAULT_T_MAX)
    p_analyze.add_argument("--json", action="store_true", help="Full report as JSON instead of a CSV row")

    p_zoo = sub.add_parser("zoo", help="Inspect the chain zoo")
    zoo_sub = p_zoo.add_subparsers(dest="zoo_cmd", required=True)
    zoo_sub.add_parser("list", help="Default zoo chain ids and sizes")
    p_build = zoo_sub.add_parser("build", help="Build one chain, e.g. 'cycle(8)'")
    p_build.add_argument("spec")
    p_build.add_argument("--out", help="Write the kernel here (.json or text) instead of stdout")

    p_run = sub.add_parser("run", help="Run the experiments of a TOML config")
    p_run.add_argument("config")
    p_run.add_argument("--seed", type=int, help="Overrides [seeds].seed")
    p_run.add_argument("--out", required=True, help="Output directory")

    p_report = sub.add_parser("report", help="Re-emit stored results of a run directory")
    p_report.add_argument("run_dir")
    p_report.add_argument("--format", choices=[f.value for f in ReportFormat], default=ReportFormat.CSV.value)
    p_report.add_argument("--out", help="Output directory (defaults to the run directory)")
    return parser


_COMMANDS = {"analyze": _analyze, "zoo": _zoo, "run": _run, "report": _report}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    if args.cmd == "analyze" and not args.alpha:
        args.alpha = [0.25]

    try:
        return _COMMANDS[args.cmd](args)
    except (MixhitError, FileNotFoundError) as e:
        if isinstance(e, RuntimeError):
            logger.error("%s", e, exc_info=True)
            return EXIT_EXPERIMENT_FAILED
        logger.error("%s", e)
        return EXIT_CONFIG


if __name__ == "__main__":
    raise SystemExit(main())
