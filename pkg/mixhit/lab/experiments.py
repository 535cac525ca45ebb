"""
The experiment suite. Each experiment takes its config section, the built
zoo and its own random stream, and returns tables and plot series; writing
files is left to the report module.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from mixhit.applib.models.distributions import TraceSpec
from mixhit.applib.models.lab import AuditRecord, ExperimentResult, ExperimentSection, PlotPoint, Table
from mixhit.applib.models.results import EquivalenceReport
from mixhit.applib.types import AsfFlavor, ExperimentName, ProbeFlavor, TimeChangeMode
from mixhit.estimators import coupon_and_p_probe, empirical_tv_vs_exact
from mixhit.kernels.core import prob_vector
from mixhit.kernels.times import equivalence_report
from mixhit.kernels.transforms import build_G, lazy, skeleton, trace_exact
from mixhit.lab import audits
from mixhit.lab.zoo import ZooChain, random_stochastic, random_subset
from mixhit.sampling.asf import asf_decompose, index_windows, reversal_symmetry_test
from mixhit.sampling.base import dump_trajectory, finite_sampler
from mixhit.sampling.gibbs import bivariate_gaussian, gaussian_conditional, make_gibbs
from mixhit.sampling.mh import finite_gamma, finite_proposal, make_mh, metropolize
from mixhit.sampling.timechange import apply_time_change

logger = logging.getLogger(__name__)

AUDIT_COLUMNS = ["check", "chain_id", "lhs", "rhs", "ok", "detail"]
# Experiments whose failed records turn into a non-zero exit
AUDITING = {ExperimentName.INEQUALITY_AUDIT, ExperimentName.PERTURBATION_STUDY}


@dataclass(frozen=True)
class RunContext:
    index: int
    seed: int
    out_dir: Optional[Path] = None


def _audit_table(records: list[AuditRecord]) -> Table:
    return Table(columns=AUDIT_COLUMNS, rows=[r.model_dump() for r in records])


def _series(chain: ZooChain) -> str:
    return chain.spec.kind.value


# === equivalence-sweep ===

def equivalence_sweep(section: ExperimentSection, chains: list[ZooChain], rng: np.random.Generator, ctx: RunContext) -> ExperimentResult:
    rows, points, intervals = [], [], []
    for alpha in section.alphas:
        reports: list[EquivalenceReport] = [
            equivalence_report(c.kernel, alpha, section.epsilon, chain_id=c.chain_id, pi=c.pi) for c in chains
        ]
        rows += [r.csv_row() for r in reports]
        ratios = [r.ratio for r in reports if r.ratio is not None]
        intervals.append({
            "alpha": alpha,
            "n_chains": len(reports),
            "n_ratios": len(ratios),
            "r_min": min(ratios) if ratios else None,
            "r_max": max(ratios) if ratios else None,
            "positive_finite": bool(ratios) and all(math.isfinite(r) and r > 0 for r in ratios),
            "maxlarge_all": all(r.maxlarge_ok for r in reports),
            "certificate_all": all(r.certificate.ok for r in reports),
        })
        label = "" if len(section.alphas) == 1 else f" alpha={alpha}"
        points += [
            PlotPoint(x=r.n, y=r.ratio, series=_series(c) + label)
            for c, r in zip(chains, reports) if r.ratio is not None
        ]

    points.sort(key=lambda p: (p.series, p.x))
    head = intervals[0] if intervals else None
    headline = None
    if head and head["n_ratios"]:
        headline = f"t_L / t_H in [{head['r_min']:.4g}, {head['r_max']:.4g}] over {head['n_ratios']} chains at alpha={head['alpha']}"
    return ExperimentResult(
        name=ExperimentName.EQUIVALENCE_SWEEP,
        index=ctx.index,
        tables={
            "equivalence": Table(columns=list(EquivalenceReport.CSV_COLUMNS), rows=rows),
            "ratio_interval": Table(columns=list(intervals[0]) if intervals else ["alpha"], rows=intervals),
        },
        plots={"ratio_vs_n": points},
        headline=headline,
    )


# === inequality-audit ===

def inequality_audit(section: ExperimentSection, chains: list[ZooChain], rng: np.random.Generator, ctx: RunContext) -> ExperimentResult:
    records: list[AuditRecord] = []
    for c in chains:
        records += audits.audit_contraction(c.kernel, c.pi, c.chain_id)
        records.append(audits.audit_epsilon_monotone(c.kernel, c.pi, c.chain_id))
        for alpha in section.alphas:
            report = equivalence_report(c.kernel, alpha, section.epsilon, chain_id=c.chain_id, pi=c.pi)
            records += audits.audit_report(report)
            records += audits.audit_submultiplicative_hitting(c.kernel, c.pi, c.chain_id, alpha)
            records += audits.audit_lazy_hitting(c.kernel, c.pi, c.chain_id, alpha)
        if c.aperiodic:
            for eps in (0.25, 0.125):
                records += audits.audit_skeleton_identity(c.kernel, c.pi, c.chain_id, eps)
            records += audits.audit_skeleton_hitting(c.kernel, c.pi, c.chain_id, section.alphas[0], section.epsilon)
            records.append(audits.audit_lazy_mixing(c.kernel, c.pi, c.chain_id, section.epsilon))
        subset = random_subset(c.n, rng)
        records.append(audits.audit_trace_domination(c.kernel, c.chain_id, subset, rng))
        records += audits.audit_trace_stationary(c.kernel, c.pi, c.chain_id, subset)

    for i in range(50):
        n = int(rng.integers(2, 13))
        kernel = random_stochastic(n, rng, sparsity=0.3)
        records.append(audits.audit_trace_lazy_commute(kernel, f"random-{i}", random_subset(n, rng)))
    for i in range(10):
        kernel = random_stochastic(int(rng.integers(2, 13)), rng)
        records.append(audits.audit_binomial_identity(kernel, f"random-{i}"))

    failures = sum(not r.ok for r in records)
    return ExperimentResult(
        name=ExperimentName.INEQUALITY_AUDIT,
        index=ctx.index,
        tables={"audits": _audit_table(records)},
        audit_failures=failures,
        headline=f"{len(records) - failures} of {len(records)} checks passed",
    )


# === perturbation-study ===

def perturbation_study(section: ExperimentSection, chains: list[ZooChain], rng: np.random.Generator, ctx: RunContext) -> ExperimentResult:
    records: list[AuditRecord] = []
    points = []
    for c in chains:
        if not c.aperiodic:
            continue
        mixing = audits.audit_perturbed_mixing(c.kernel, c.pi, c.chain_id, section.epsilon)
        records += mixing
        if mixing:
            upper = mixing[1]
            points.append(PlotPoint(x=upper.rhs / 4, y=upper.lhs, series=_series(c)))
        for alpha in section.alphas:
            record = audits.audit_perturbed_hitting(c.kernel, c.pi, c.chain_id, alpha)
            if record is not None:
                records.append(record)

    failures = sum(not r.ok for r in records)
    points.sort(key=lambda p: (p.series, p.x))
    return ExperimentResult(
        name=ExperimentName.PERTURBATION_STUDY,
        index=ctx.index,
        tables={"audits": _audit_table(records)},
        plots={"perturbed_mixing": points},
        audit_failures=failures,
        headline=f"{len(records) - failures} of {len(records)} perturbation checks passed",
    )


# === asf-study ===

PROBE_COLUMNS = ["flavor", "d", "k", "gamma", "point", "halfwidth", "bound", "intermediate_bound", "passed"]


def _probe_row(result) -> dict:
    return {
        "flavor": result.flavor.value,
        "d": result.d,
        "k": result.k,
        "gamma": result.gamma,
        "point": result.estimate.point,
        "halfwidth": result.estimate.halfwidth,
        "bound": result.bound,
        "intermediate_bound": result.intermediate_bound,
        "passed": result.passed,
    }


def asf_study(section: ExperimentSection, chains: list[ZooChain], rng: np.random.Generator, ctx: RunContext) -> ExperimentResult:
    dims = section.dims or [2, 3, 4]
    n = section.n_samples
    probes, points = [], []

    for d in dims:
        k_d = math.ceil(4 * d * math.log(10 * d))
        for k in sorted({math.ceil(k_d / 4), math.ceil(k_d / 2), k_d, *section.ks}):
            result = coupon_and_p_probe(d, k, n, ProbeFlavor.LAZY_GIBBS, rng)
            probes.append(_probe_row(result))
            points.append(PlotPoint(x=k, y=result.estimate.point, series=f"lazy_gibbs d={d}"))
            points.append(PlotPoint(x=k, y=result.bound, series=f"bound d={d}"))
        plain_t = max(1, math.ceil(0.5 * d * math.log(d)))
        probes.append(_probe_row(coupon_and_p_probe(d, plain_t, n, ProbeFlavor.PLAIN, rng)))

    # Finite MH fixture with exactly known gamma
    weights = rng.uniform(0.5, 2.0, size=5)
    proposal = np.ones((5, 5)) - np.eye(5)
    mh_kernel = metropolize(weights, proposal)
    gamma = finite_gamma(proposal, weights)
    for k in sorted({4, 8, 16, *section.ks}):
        probes.append(_probe_row(coupon_and_p_probe(mh_kernel.n, k, n, ProbeFlavor.MH, rng, kernel=mh_kernel)))
        probes.append(_probe_row(coupon_and_p_probe(1, k, n, ProbeFlavor.MH, rng, gamma=1.0)))

    # Full decompositions on real samplers
    n_mc = min(n, 2000)
    decompositions = []
    _, gibbs_sampler = make_gibbs(2, gaussian_conditional(*bivariate_gaussian(0.5)))
    k_g = math.ceil(8 * math.log(20))
    gibbs = asf_decompose(gibbs_sampler, AsfFlavor.GIBBS, k_g, n_mc, rng, start=np.zeros(2))
    log_w = np.log(weights / weights.sum())
    _, mh_sampler = make_mh(lambda x: float(log_w[x]), finite_proposal(proposal / 4), n_states=5)
    stickiest = int(np.argmax(np.diag(mh_kernel.matrix)))
    mh = asf_decompose(mh_sampler, AsfFlavor.MH, 8, n_mc, rng, start=stickiest, gamma=gamma)
    for dec in (gibbs, mh):
        decompositions.append({
            "flavor": dec.flavor.value,
            "k": dec.k,
            "p": dec.p,
            "halfwidth": dec.p_estimate.halfwidth,
            "bound": dec.bound,
            "C_target": dec.C_target,
            "within_bound": dec.within_bound,
        })

    windows = index_windows(2, 3, min(n, 20_000), rng)
    p_value = reversal_symmetry_test(w for w, bad in windows if not bad)

    points.sort(key=lambda p: (p.series, p.x))
    failed = sum(not row["passed"] for row in probes)
    return ExperimentResult(
        name=ExperimentName.ASF_STUDY,
        index=ctx.index,
        tables={
            "probes": Table(columns=PROBE_COLUMNS, rows=probes),
            "decompositions": Table(columns=list(decompositions[0]), rows=decompositions),
            "reversal": Table(columns=["d", "k", "n_windows", "p_value", "significant"],
                              rows=[{"d": 2, "k": 3, "n_windows": len(windows), "p_value": p_value, "significant": p_value < 0.001}]),
        },
        plots={"p_vs_k": points},
        headline=f"{len(probes) - failed} of {len(probes)} probes within their bound",
    )


# === sampler-fidelity ===

FIDELITY_COLUMNS = ["chain_id", "mode", "k", "start", "tv", "band", "ok"]


def sampler_fidelity(section: ExperimentSection, chains: list[ZooChain], rng: np.random.Generator, ctx: RunContext) -> ExperimentResult:
    max_states = section.max_states or 4
    ks = section.ks or [1, 2, 3, 4]
    rows = []
    for c in chains:
        if c.n > max_states:
            continue
        base = finite_sampler(c.kernel)
        cases = [(TimeChangeMode.LAZY, 1, lazy(c.kernel), None)]
        cases += [(TimeChangeMode.SKELETON, k, skeleton(c.kernel, k), None) for k in ks]
        cases += [(TimeChangeMode.G, k, build_G(c.kernel, k), None) for k in ks if k <= 3]
        watched = tuple(range(max(1, c.n // 2)))
        cases.append((TimeChangeMode.TRACE, 1, trace_exact(c.kernel, TraceSpec(subset=watched)), watched))

        for mode, k, exact, subset in cases:
            indicator = None if subset is None else (lambda x, s=frozenset(subset): x in s)
            sampler = apply_time_change(base, mode, k=k, indicator=indicator)
            starts = range(c.n) if subset is None else subset
            encode = None if subset is None else {s: i for i, s in enumerate(subset)}
            for pos, start in enumerate(starts):
                law = prob_vector(exact.matrix[pos if subset is not None else start])
                est = empirical_tv_vs_exact(sampler, start, law, section.n_samples, rng, encode=encode)
                rows.append({
                    "chain_id": c.chain_id, "mode": mode.value, "k": k, "start": start,
                    "tv": est.point, "band": est.halfwidth, "ok": est.point <= est.halfwidth,
                })

        if section.dump_trajectories and ctx.out_dir is not None:
            path = ctx.out_dir / f"{ctx.index:02d}-trajectory-{c.chain_id}.csv"
            dump_trajectory(path, base.path(0, 1000, rng))

    outside = sum(not r["ok"] for r in rows)
    return ExperimentResult(
        name=ExperimentName.SAMPLER_FIDELITY,
        index=ctx.index,
        tables={"fidelity": Table(columns=FIDELITY_COLUMNS, rows=rows)},
        headline=f"{len(rows) - outside} of {len(rows)} one-step laws inside the 99% DKW band",
    )


EXPERIMENTS: dict[ExperimentName, Callable[..., ExperimentResult]] = {
    ExperimentName.EQUIVALENCE_SWEEP: equivalence_sweep,
    ExperimentName.INEQUALITY_AUDIT: inequality_audit,
    ExperimentName.PERTURBATION_STUDY: perturbation_study,
    ExperimentName.ASF_STUDY: asf_study,
    ExperimentName.SAMPLER_FIDELITY: sampler_fidelity,
}
