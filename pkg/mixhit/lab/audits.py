"""
Inequality audits: every checkable property of the kernel, transform and
time computations, as records (check, chain, lhs, rhs, ok). The test suite
and the inequality-audit / perturbation-study experiments share them.
"""

from __future__ import annotations

import itertools
import logging
import math
from typing import Optional, Sequence

import numpy as np

from mixhit.applib.models.distributions import FiniteKernel, ProbVector, TraceSpec
from mixhit.applib.models.lab import AuditRecord
from mixhit.applib.models.results import EquivalenceReport
from mixhit.kernels.core import (
    check_reversible,
    contraction_profile,
    prob_vector,
    stationarity_defect,
    stationary_distribution,
)
from mixhit.kernels.times import (
    REPORT_SLACK,
    easy_direction_constants,
    hitting_moments,
    large_hitting_time,
    max_hitting_time,
    minimal_feasible_sets,
    mixing_time,
)
from mixhit.kernels.transforms import binomial_lazy_power, lazy, perturb_within, skeleton, trace_exact
from mixhit.sampling.rng import make_rng

logger = logging.getLogger(__name__)

IDENTITY_TOLERANCE = 1e-10


def _record(check: str, chain_id: str, lhs: Optional[float], rhs: Optional[float], slack: float = REPORT_SLACK, detail: str = "") -> AuditRecord:
    ok = lhs is None or rhs is None or lhs <= rhs + slack
    if not ok:
        logger.warning("audit %s failed on %s: %r > %r %s", check, chain_id, lhs, rhs, detail)
    return AuditRecord(check=check, chain_id=chain_id, lhs=lhs, rhs=rhs, ok=ok, detail=detail)


def _exact(check: str, chain_id: str, value: Optional[float], expected: Optional[float], detail: str = "") -> AuditRecord:
    ok = value == expected
    if not ok:
        logger.warning("audit %s failed on %s: %r != %r %s", check, chain_id, value, expected, detail)
    return AuditRecord(check=check, chain_id=chain_id, lhs=value, rhs=expected, ok=ok, detail=detail)


# === Contraction ===

def audit_contraction(kernel: FiniteKernel, pi: ProbVector, chain_id: str, horizon: int = 25) -> list[AuditRecord]:
    """d <= d-bar <= 2d, and d-bar(s + t) <= d-bar(s) d-bar(t), for s, t <= horizon."""
    profile = contraction_profile(kernel, pi, 2 * horizon)
    d = np.array(profile.d_values)
    dbar = np.array(profile.dbar_values)
    lower = float((d - dbar).max())
    upper = float((dbar - 2 * d).max())
    s = np.arange(horizon + 1)
    excess = dbar[s[:, None] + s[None, :]] - dbar[s][:, None] * dbar[s][None, :]
    monotone = float(max(np.diff(d).max(initial=0.0), np.diff(dbar).max(initial=0.0)))
    return [
        _record("d_le_dbar", chain_id, lower, 0.0, IDENTITY_TOLERANCE),
        _record("dbar_le_2d", chain_id, upper, 0.0, IDENTITY_TOLERANCE),
        _record("dbar_submultiplicative", chain_id, float(excess.max()), 0.0, IDENTITY_TOLERANCE),
        _record("profile_non_increasing", chain_id, monotone, 0.0, IDENTITY_TOLERANCE),
    ]


# === Report-level checks ===

def audit_report(report: EquivalenceReport) -> list[AuditRecord]:
    detail = f"alpha={report.alpha}"
    records = [
        _record("maxlarge_lower", report.chain_id, 0.1 * report.tau_g, report.t_H, detail=detail),
        _record("maxlarge_upper", report.chain_id, report.t_H, 2.0 * report.tau_g, detail=detail),
        AuditRecord(check="mixequivalent", chain_id=report.chain_id, lhs=report.t_m.time, rhs=report.t_bar_m.time,
                    ok=report.mixequivalent_ok, detail=detail),
    ]
    cert = report.certificate
    if cert.vacuous:
        records.append(AuditRecord(check="easy_direction", chain_id=report.chain_id, lhs=None, rhs=None, ok=True, detail="vacuous: lazy chain unmixed"))
    else:
        records.append(_record("easy_direction_distance", report.chain_id, cert.d_at_T, report.alpha / 2, 1e-12, detail))
        records.append(_record("easy_direction", report.chain_id, cert.l_H, float(cert.bound), detail=detail))
    if report.ratio is not None:
        ok = math.isfinite(report.ratio) and report.ratio > 0
        records.append(AuditRecord(check="ratio_positive_finite", chain_id=report.chain_id, lhs=report.ratio, rhs=None, ok=ok, detail=detail))
    return records


# === Time identities and comparisons ===

def audit_epsilon_monotone(kernel: FiniteKernel, pi: ProbVector, chain_id: str, epsilons: Sequence[float] = (0.5, 0.25, 0.125, 0.0625)) -> AuditRecord:
    times = [mixing_time(kernel, pi, e).time for e in sorted(epsilons, reverse=True)]
    # Larger epsilon first, so times must not decrease; unmixed counts as infinite
    finite = [math.inf if t is None else t for t in times]
    ok = all(a <= b for a, b in zip(finite, finite[1:]))
    return AuditRecord(check="mixing_time_epsilon_monotone", chain_id=chain_id, lhs=None, rhs=None, ok=ok, detail=f"times={times}")


def audit_skeleton_identity(kernel: FiniteKernel, pi: ProbVector, chain_id: str, epsilon: float, ks: Sequence[int] = range(1, 11)) -> list[AuditRecord]:
    """Standardized mixing time of P^k equals ceil(t-bar_m / k)."""
    base = mixing_time(kernel, pi, epsilon, standardized=True).time
    records = []
    for k in ks:
        value = mixing_time(skeleton(kernel, k), pi, epsilon, standardized=True).time
        expected = None if base is None else math.ceil(base / k)
        records.append(_exact("skeleton_mixing_identity", chain_id, value, expected, f"k={k} eps={epsilon}"))
    return records


def audit_skeleton_hitting(kernel: FiniteKernel, pi: ProbVector, chain_id: str, alpha: float, epsilon: float = 0.25, ks: Sequence[int] = (1, 2, 4)) -> list[AuditRecord]:
    """t_H of P^k <= 2 l0 ceil(C t-bar_m / k) with C, l0 the easy-direction constants."""
    t_bar = mixing_time(kernel, pi, epsilon, standardized=True).time
    if t_bar is None:
        return []
    c, l0 = easy_direction_constants(alpha)
    return [
        _record("skeleton_hitting_bound", chain_id, max_hitting_time(skeleton(kernel, k), pi, alpha).t_H,
                float(2 * l0 * math.ceil(c * t_bar / k)), detail=f"k={k} alpha={alpha}")
        for k in ks
    ]


def audit_lazy_hitting(kernel: FiniteKernel, pi: ProbVector, chain_id: str, alpha: float) -> list[AuditRecord]:
    t_h = max_hitting_time(kernel, pi, alpha).t_H
    l_h = max_hitting_time(lazy(kernel), pi, alpha).t_H
    detail = f"alpha={alpha}"
    return [
        _record("lazy_hitting_lower", chain_id, t_h, l_h, detail=detail),
        _record("lazy_hitting_upper", chain_id, l_h, 3000.0 * t_h, detail=detail),
    ]


def audit_lazy_mixing(kernel: FiniteKernel, pi: ProbVector, chain_id: str, epsilon: float = 0.25) -> AuditRecord:
    """t_L(eps) <= max(2 t_m(eps/2), ceil(10/eps))."""
    t_l = mixing_time(lazy(kernel), pi, epsilon).time
    t_half = mixing_time(kernel, pi, epsilon / 2).time
    rhs = math.inf if t_half is None else float(max(2 * t_half, math.ceil(10 / epsilon)))
    lhs = math.inf if t_l is None else float(t_l)
    return AuditRecord(check="lazy_mixing_bound", chain_id=chain_id, lhs=lhs, rhs=rhs, ok=rhs == math.inf or lhs <= rhs, detail=f"eps={epsilon}")


def audit_submultiplicative_hitting(kernel: FiniteKernel, pi: ProbVector, chain_id: str, alpha: float, ks: Sequence[int] = (1, 2, 3)) -> list[AuditRecord]:
    """max over feasible A and x of P_x(tau_A > k tau_g) <= 0.1^k."""
    tau_g = large_hitting_time(kernel, pi, alpha)
    horizon = max(ks) * tau_g
    worst = np.zeros(len(ks))
    for a in minimal_feasible_sets(pi, alpha):
        cdf = hitting_moments(kernel, a, horizon).cdf
        worst = np.maximum(worst, [(1.0 - cdf[:, k * tau_g]).max() for k in ks])
    return [
        _record("hitting_tail_submultiplicative", chain_id, float(w), 0.1**k, detail=f"k={k} alpha={alpha} tau_g={tau_g}")
        for k, w in zip(ks, worst)
    ]


# Above this many watched states the targets are sampled instead of enumerated
DOMINATION_ENUMERATION_CAP = 10
DOMINATION_SAMPLES = 256


def trace_domination_targets(size: int, rng: Optional[np.random.Generator] = None) -> list[tuple[int, ...]]:
    """Non-empty position subsets of a watched set of `size` states: all of them up to the cap, else a sample."""
    if size <= DOMINATION_ENUMERATION_CAP:
        return [c for r in range(1, size + 1) for c in itertools.combinations(range(size), r)]
    rng = rng if rng is not None else make_rng(size)
    targets = {tuple(range(size))}
    targets.update((p,) for p in range(size))
    while len(targets) < DOMINATION_SAMPLES:
        mask = rng.random(size) < 0.5
        if mask.any():
            targets.add(tuple(np.flatnonzero(mask).tolist()))
    return sorted(targets, key=lambda t: (len(t), t))


def audit_trace_domination(
    kernel: FiniteKernel,
    chain_id: str,
    subset: Sequence[int],
    rng: Optional[np.random.Generator] = None,
) -> AuditRecord:
    """Hitting A inside S is never slower for the trace chain, for every non-empty A of S (sampled past the cap)."""
    spec = TraceSpec(subset=subset)
    traced = trace_exact(kernel, spec)
    states = list(spec.subset)
    targets = trace_domination_targets(len(states), rng)
    worst, worst_target = -math.inf, None
    for positions in targets:
        on_trace = hitting_moments(traced, list(positions)).expected
        on_chain = hitting_moments(kernel, [states[p] for p in positions]).expected[states]
        finite = np.isfinite(on_chain)
        excess = float((on_trace[finite] - on_chain[finite]).max(initial=-math.inf))
        if excess > worst:
            worst, worst_target = excess, [states[p] for p in positions]
    detail = f"S={states} targets={len(targets)} worst_A={worst_target}"
    return _record("trace_hitting_domination", chain_id, worst, 0.0, IDENTITY_TOLERANCE, detail=detail)


# === Transform identities ===

def audit_binomial_identity(kernel: FiniteKernel, chain_id: str, t_max: int = 20) -> AuditRecord:
    lazy_m = lazy(kernel).matrix
    power = np.eye(kernel.n)
    worst = 0.0
    for t in range(t_max + 1):
        worst = max(worst, float(np.abs(power - binomial_lazy_power(kernel, t).matrix).max()))
        power = power @ lazy_m
    return _record("binomial_lazy_identity", chain_id, worst, IDENTITY_TOLERANCE, 0.0, detail=f"t<={t_max}")


def audit_trace_lazy_commute(kernel: FiniteKernel, chain_id: str, subset: Sequence[int]) -> AuditRecord:
    spec = TraceSpec(subset=subset)
    diff = np.abs(lazy(trace_exact(kernel, spec)).matrix - trace_exact(lazy(kernel), spec).matrix).max()
    return _record("trace_lazy_commute", chain_id, float(diff), IDENTITY_TOLERANCE, 0.0, detail=f"S={list(spec.subset)}")


def audit_trace_stationary(kernel: FiniteKernel, pi: ProbVector, chain_id: str, subset: Sequence[int]) -> list[AuditRecord]:
    spec = TraceSpec(subset=subset)
    traced = trace_exact(kernel.model_copy(update={"cached_stationary": None}), spec)
    restricted = pi.weights[list(spec.subset)]
    pi_s = prob_vector(restricted / restricted.sum())
    records = [_record("trace_restricted_stationary", chain_id, stationarity_defect(traced, pi_s), IDENTITY_TOLERANCE, 0.0, detail=f"S={list(spec.subset)}")]
    if check_reversible(kernel, pi, 1e-10):
        records.append(AuditRecord(check="trace_reversible", chain_id=chain_id, lhs=None, rhs=None,
                                   ok=check_reversible(traced, pi_s, 1e-10), detail=f"S={list(spec.subset)}"))
    return records


# === Perturbations ===

def audit_perturbed_mixing(kernel: FiniteKernel, pi: ProbVector, chain_id: str, epsilon: float = 0.25) -> list[AuditRecord]:
    """With delta = 1/(256 t_m): t_m / 4 <= t_m' <= 4 t_m."""
    t_m = mixing_time(kernel, pi, epsilon).time
    if not t_m:
        return []
    perturbed = perturb_within(kernel, 1.0 / (256 * t_m))
    t_p = mixing_time(perturbed, stationary_distribution(perturbed), epsilon).time
    t_p = math.inf if t_p is None else float(t_p)
    detail = f"t_m={t_m} t_m'={t_p}"
    return [
        _record("perturbed_mixing_lower", chain_id, t_m / 4, t_p, detail=detail),
        _record("perturbed_mixing_upper", chain_id, t_p, 4.0 * t_m, detail=detail),
    ]


def audit_perturbed_hitting(kernel: FiniteKernel, pi: ProbVector, chain_id: str, alpha: float) -> Optional[AuditRecord]:
    """With delta = 1/(30 t_H(alpha)): t_H' <= 60 t_H."""
    t_h = max_hitting_time(kernel, pi, alpha).t_H
    if t_h <= 0:
        return None
    perturbed = perturb_within(kernel, 1.0 / (30 * t_h))
    t_p = max_hitting_time(perturbed, stationary_distribution(perturbed), alpha).t_H
    return _record("perturbed_hitting_upper", chain_id, t_p, 60.0 * t_h, detail=f"alpha={alpha}")
