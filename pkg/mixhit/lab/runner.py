"""
Config-driven experiment runner. Experiments run concurrently in a bounded
worker pool, each on its own random stream; per-experiment failures are
recorded and the manifest is written once, after everything finished.
"""

from __future__ import annotations

import asyncio
import logging
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

from pydantic import ValidationError

from mixhit import __version__
from mixhit.applib.config import config
from mixhit.applib.errors import ConfigError
from mixhit.applib.helpers import dump_json, sha256_hex
from mixhit.applib.models.lab import ExperimentConfig, ExperimentOutput, ExperimentResult, RunManifest
from mixhit.applib.types import ReportFormat
from mixhit.lab.experiments import AUDITING, EXPERIMENTS, RunContext
from mixhit.lab.report import MANIFEST_FILE, emit_report, render_summary, save_results
from mixhit.lab.zoo import ZooChain, build_zoo, default_zoo, parse_zoo_spec
from mixhit.sampling.rng import make_rng

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

logger = logging.getLogger(__name__)


def parse_experiment_config(raw: bytes, source: str = "<config>") -> ExperimentConfig:
    try:
        data = tomllib.loads(raw.decode("utf-8"))
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as e:
        # TOMLDecodeError messages carry "(at line L, column C)"
        raise ConfigError(f"{source}: {e}") from e
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        problems = "; ".join(f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors())
        raise ConfigError(f"{source}: {problems}") from e


def load_experiment_config(path: str | Path) -> tuple[ExperimentConfig, bytes]:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e}") from e
    return parse_experiment_config(raw, str(path)), raw


def build_chains(cfg: ExperimentConfig) -> list[ZooChain]:
    specs = [parse_zoo_spec(s) for s in cfg.chains.zoo] if cfg.chains.zoo else default_zoo()
    return build_zoo(specs, cfg.chains.max_states)


async def _run_all(cfg: ExperimentConfig, chains: list[ZooChain], seed: int, out_dir: Path) -> list[ExperimentResult | BaseException]:
    semaphore = asyncio.Semaphore(config.THREADS)

    async def run_one(index: int, section) -> ExperimentResult:
        async with semaphore:
            logger.info("starting experiment %d: %s", index, section.name.value)
            ctx = RunContext(index=index, seed=seed, out_dir=out_dir)
            experiment = EXPERIMENTS[section.name]
            return await asyncio.to_thread(experiment, section, chains, make_rng(seed, stream=index), ctx)

    tasks = [run_one(i, section) for i, section in enumerate(cfg.experiments, start=1)]
    return await asyncio.gather(*tasks, return_exceptions=True)


def run_experiment(
    config_path: str | Path,
    out_dir: str | Path,
    seed: Optional[int] = None,
    formats: tuple[ReportFormat, ...] = tuple(ReportFormat),
) -> RunManifest:
    cfg, raw = load_experiment_config(config_path)
    return run_config(cfg, raw, out_dir, seed, formats)


def run_config(
    cfg: ExperimentConfig,
    raw: bytes,
    out_dir: str | Path,
    seed: Optional[int] = None,
    formats: tuple[ReportFormat, ...] = tuple(ReportFormat),
) -> RunManifest:
    seed = cfg.seeds.seed if seed is None else seed
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    timestamp = datetime.now(timezone.utc)

    chains = build_chains(cfg) if cfg.experiments else []
    logger.info("running %d experiment(s) on %d chain(s), seed %d", len(cfg.experiments), len(chains), seed)
    outcomes = asyncio.run(_run_all(cfg, chains, seed, out_dir))

    results: list[ExperimentResult] = []
    outputs: list[ExperimentOutput] = []
    for index, (section, outcome) in enumerate(zip(cfg.experiments, outcomes), start=1):
        if isinstance(outcome, BaseException):
            logger.error("experiment %d (%s) failed", index, section.name.value, exc_info=outcome)
            outputs.append(ExperimentOutput(name=section.name, index=index, ok=False, error=f"{type(outcome).__name__}: {outcome}"))
            continue
        files = [p.name for fmt in formats for p in emit_report(outcome, out_dir, fmt)]
        failures = outcome.audit_failures if section.name in AUDITING else 0
        results.append(outcome)
        outputs.append(ExperimentOutput(name=section.name, index=index, ok=True, files=files, audit_failures=failures))

    manifest = RunManifest(
        config_hash=sha256_hex(raw),
        seed=seed,
        version=__version__,
        timestamp=timestamp,
        outputs=outputs,
    )
    save_results(results, out_dir)
    render_summary(manifest, results, out_dir)
    dump_json(manifest.model_dump(mode="json"), out_dir / MANIFEST_FILE)
    logger.info("run finished: %d ok, %d failed", sum(o.ok for o in outputs), sum(not o.ok for o in outputs))
    return manifest
