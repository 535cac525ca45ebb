"""
Monte Carlo estimators with explicit confidence bounds: hitting times,
large hitting times, one-step total variation against an exact law, and the
coupon-collector / almost-strong-Feller probability probes.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any, Callable, Mapping, Optional, Sequence

import numpy as np
from scipy.stats import norm

from mixhit.applib.models.distributions import FiniteKernel, ProbVector
from mixhit.applib.models.estimates import LargeHittingEstimate, McEstimate, ProbeResult
from mixhit.applib.types import HittingConvention, ProbeFlavor
from mixhit.kernels.times import COMPARE_SLACK
from mixhit.sampling.base import FiniteSampler
from mixhit.sampling.timechange import lazy_clock

logger = logging.getLogger(__name__)

MIN_HITTING_RUNS = 100
MIN_PROBE_RUNS = 1000
PROBE_CHUNK = 10_000


# === Intervals ===

def hoeffding_halfwidth(n: int, delta: float) -> float:
    """Two-sided Hoeffding halfwidth for a mean of n variables in [0, 1] at confidence 1 - delta."""
    return math.sqrt(math.log(2.0 / delta) / (2.0 * n))


def dkw_halfwidth(n: int, delta: float) -> float:
    """Dvoretzky-Kiefer-Wolfowitz band sqrt(ln(2/delta) / 2n) at confidence 1 - delta."""
    return math.sqrt(math.log(2.0 / delta) / (2.0 * n))


def wilson_interval(successes: int, n: int, confidence: float = 0.99) -> tuple[float, float]:
    if n <= 0:
        return 0.0, 1.0
    z = norm.ppf(0.5 + confidence / 2.0)
    p = successes / n
    denom = 1.0 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    spread = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return max(0.0, centre - spread), min(1.0, centre + spread)


def bernoulli_estimate(successes: int, n: int, confidence: float = 0.99) -> McEstimate:
    """Frequency with the Wilson interval folded into a symmetric halfwidth."""
    p = successes / n
    lo, hi = wilson_interval(successes, n, confidence)
    return McEstimate(point=p, halfwidth=max(p - lo, hi - p), confidence=confidence, n_samples=n)


# === Hitting times ===

@dataclass(frozen=True)
class HittingStats:
    """Sufficient statistics of a batch of hitting times; `+` merges batches in any order."""
    count: int = 0
    total: float = 0.0
    total_sq: float = 0.0
    censored: int = 0

    def __add__(self, other: "HittingStats") -> "HittingStats":
        return HittingStats(
            self.count + other.count,
            self.total + other.total,
            self.total_sq + other.total_sq,
            self.censored + other.censored,
        )

    @classmethod
    def from_times(cls, times: Sequence[int], censored: int = 0) -> "HittingStats":
        t = np.asarray(times, dtype=float)
        return cls(int(t.size), float(t.sum()), float((t * t).sum()), censored)

    def estimate(self, confidence: float = 0.99) -> McEstimate:
        mean = self.total / self.count
        var = max(0.0, self.total_sq / self.count - mean * mean)
        if self.count > 1:
            var *= self.count / (self.count - 1)
        z = norm.ppf(0.5 + confidence / 2.0)
        return McEstimate(
            point=mean,
            halfwidth=float(z * math.sqrt(var / self.count)),
            confidence=confidence,
            n_samples=self.count,
            n_censored=self.censored,
        )


def _hitting_time(sampler, start, target_indicator, horizon: int, rng, convention: HittingConvention) -> Optional[int]:
    for t, x in enumerate(sampler.iter_path(start, rng)):
        if t > horizon:
            return None
        if target_indicator(x) and (t > 0 or convention == HittingConvention.INCLUSIVE):
            return t
    return None


def hitting_stats(sampler, target_indicator, start, n: int, horizon: int, rng, convention=HittingConvention.INCLUSIVE) -> HittingStats:
    times, censored = [], 0
    for _ in range(n):
        t = _hitting_time(sampler, start, target_indicator, horizon, rng, convention)
        if t is None:
            censored += 1
            t = horizon
        times.append(t)
    return HittingStats.from_times(times, censored)


def mc_expected_hitting(
    sampler,
    target_indicator: Callable[[Any], bool],
    starts: Sequence[Any],
    n: int,
    horizon: int,
    rng: np.random.Generator,
    confidence: float = 0.99,
    convention: HittingConvention = HittingConvention.INCLUSIVE,
) -> list[McEstimate]:
    """Mean hitting time per start; censored runs count as `horizon` and make the point a lower bound."""
    if n < MIN_HITTING_RUNS:
        raise ValueError(f"need at least {MIN_HITTING_RUNS} runs per start, got {n}")
    estimates = []
    for start in starts:
        est = hitting_stats(sampler, target_indicator, start, n, horizon, rng, convention).estimate(confidence)
        if est.n_censored:
            logger.warning("%d of %d runs from %r were censored at horizon %d", est.n_censored, n, start, horizon)
        estimates.append(est)
    return estimates


@dataclass(frozen=True)
class FamilyMember:
    """A set given by its indicator, with its stationary mass known analytically."""
    indicator: Callable[[Any], bool]
    mass: float
    name: str = ""


def mc_large_hitting(
    sampler,
    family: Sequence[FamilyMember],
    alpha: float,
    starts: Sequence[Any],
    n: int,
    rng: np.random.Generator,
    threshold: float = 0.9,
    horizon: int = 1000,
    confidence: float = 0.99,
    convention: HittingConvention = HittingConvention.INCLUSIVE,
) -> LargeHittingEstimate:
    """
    Smallest t at which the worst (start, member) pair has Wilson lower bound on
    P_x(tau_A <= t) above threshold. Only members with mass >= alpha take part,
    and the answer speaks for the probed family only.
    """
    members = [m for m in family if m.mass >= alpha - COMPARE_SLACK]
    if not members:
        raise ValueError(f"no family member has stationary mass >= {alpha}")
    best_possible = wilson_interval(n, n, confidence)[0]
    if best_possible <= threshold:
        # n / (n + z^2) is the largest lower bound n runs can give
        raise ValueError(
            f"{n} runs cannot push the {confidence:g} Wilson lower bound above {threshold}; "
            f"need n > {threshold} z^2 / (1 - {threshold})"
        )

    sorted_times = []
    for member in members:
        for start in starts:
            times = [
                _hitting_time(sampler, start, member.indicator, horizon, rng, convention)
                for _ in range(n)
            ]
            sorted_times.append(np.sort([horizon + 1 if t is None else t for t in times]))

    for t in range(horizon + 1):
        worst = min(wilson_interval(int(np.searchsorted(s, t, side="right")), n, confidence)[0] for s in sorted_times)
        if worst > threshold:
            return LargeHittingEstimate(
                time=t, threshold=threshold, alpha=alpha, n_members=len(members),
                n_starts=len(starts), n_samples=n, worst_lower_bound=worst,
            )
    logger.warning("no t <= %d cleared threshold %g on the probed family", horizon, threshold)
    return LargeHittingEstimate(
        time=None, threshold=threshold, alpha=alpha, n_members=len(members), n_starts=len(starts), n_samples=n,
    )


# === One-step total variation ===

def empirical_step_law(sampler, start: int, n: int, n_states: int, rng: np.random.Generator, encode: Optional[Mapping[int, int]] = None) -> np.ndarray:
    """Histogram of one step from `start`; `encode` maps a state to its bin when the bins are a subset."""
    counts = np.zeros(n_states)
    for _ in range(n):
        x = sampler.step(start, rng)
        counts[x if encode is None else encode[x]] += 1
    return counts / n


def empirical_tv_vs_exact(
    sampler,
    start: int,
    exact: ProbVector,
    n: int,
    rng: np.random.Generator,
    delta: float = 0.01,
    encode: Optional[Mapping[int, int]] = None,
) -> McEstimate:
    """TV between the empirical one-step histogram from `start` and an exact law, with the DKW band."""
    law = empirical_step_law(sampler, start, n, exact.n, rng, encode)
    tv = float(min(1.0, 0.5 * np.abs(law - exact.weights).sum()))
    return McEstimate(point=tv, halfwidth=dkw_halfwidth(n, delta), confidence=1.0 - delta, n_samples=n)


# === Coupon collector and ASF probes ===

def plain_coupon_bound(d: int, t: int) -> float:
    """
    Union bound P(some coupon missed) <= d (1 - 1/d)^t after t uniform draws from
    d coupons. The classical collector statement is a lower bound on non-coverage
    near t = d log(d) / 2; the plain probe checks this upper bound.
    """
    return min(1.0, d * (1.0 - 1.0 / d) ** t)


def lazy_gibbs_bounds(d: int, k: int) -> tuple[float, float]:
    """(d (1 - 1/d)^(k/4) + e^(-k^2/4), 2 d e^(-k/4d))."""
    intermediate = d * (1.0 - 1.0 / d) ** (k / 4) + math.exp(-k * k / 4)
    return intermediate, 2 * d * math.exp(-k / (4 * d))


def mh_bound(gamma: float, k: int) -> float:
    return (1.0 - gamma / 2.0) ** k


def _uncovered(indices: np.ndarray, valid: np.ndarray, d: int) -> np.ndarray:
    covered = np.ones(indices.shape[0], dtype=bool)
    for c in range(d):
        covered &= ((indices == c) & valid).any(axis=1)
    return ~covered


def _probe_plain(d: int, t: int, size: int, rng) -> int:
    indices = rng.integers(d, size=(size, t))
    return int(_uncovered(indices, np.ones_like(indices, dtype=bool), d).sum())


def _probe_lazy_gibbs(d: int, k: int, size: int, rng) -> int:
    last = lazy_clock(rng, size, k)[:, -1]
    # Index window i_0 .. i_{L(k)}
    indices = rng.integers(d, size=(size, k + 1))
    valid = np.arange(k + 1)[None, :] <= last[:, None]
    return int(_uncovered(indices, valid, d).sum())


def _probe_mh(k: int, size: int, rng, gamma: float, kernel: Optional[FiniteKernel], start: Optional[int]) -> int:
    last = lazy_clock(rng, size, k)[:, -1]
    stayed = np.ones(size, dtype=bool)
    if kernel is None:
        # Worst case allowed by gamma: every base step moves with probability exactly gamma
        for t in range(k):
            active = t < last
            stayed &= ~(active & (rng.random(size) < gamma))
        return int(stayed.sum())

    sampler = FiniteSampler(kernel)
    states = np.full(size, start, dtype=np.int64)
    for t in range(k):
        active = t < last
        nxt = sampler.advance(states, rng)
        stayed &= ~(active & (nxt != states))
        states = np.where(active, nxt, states)
    return int(stayed.sum())


def coupon_and_p_probe(
    d: int,
    k: int,
    n: int,
    flavor: ProbeFlavor | str,
    rng: np.random.Generator,
    gamma: Optional[float] = None,
    kernel: Optional[FiniteKernel] = None,
    start: Optional[int] = None,
    confidence: float = 0.99,
) -> ProbeResult:
    """
    Empirical bad-event frequency next to the analytic bound at the same parameters.

    plain: d coupons not all drawn in k uniform draws.
    lazy_gibbs: indices i_0..i_{L(k)} of the lazy Gibbs index process miss a coordinate.
    mh: the lazy MH chain never leaves its start, X_0 = ... = X_{L(k)}; with a finite
    kernel the start defaults to its stickiest state and gamma to its exact value.
    """
    flavor = ProbeFlavor(flavor)
    if d < 1 or k < 1:
        raise ValueError("d and k must be >= 1")
    if n < MIN_PROBE_RUNS:
        raise ValueError(f"need at least {MIN_PROBE_RUNS} runs, got {n}")

    intermediate = None
    if flavor == ProbeFlavor.MH:
        if kernel is not None:
            rates = 1.0 - np.diag(kernel.matrix)
            gamma = float(rates.min()) if gamma is None else gamma
            start = int(np.argmin(rates)) if start is None else start
        if gamma is None or not 0.0 < gamma <= 1.0:
            raise ValueError("mh probe needs gamma in (0, 1] or a finite kernel")
        bound = mh_bound(gamma, k)
    elif flavor == ProbeFlavor.LAZY_GIBBS:
        intermediate, bound = lazy_gibbs_bounds(d, k)
    else:
        bound = plain_coupon_bound(d, k)

    bad = 0
    for offset in range(0, n, PROBE_CHUNK):
        size = min(PROBE_CHUNK, n - offset)
        match flavor:
            case ProbeFlavor.PLAIN:
                bad += _probe_plain(d, k, size, rng)
            case ProbeFlavor.LAZY_GIBBS:
                bad += _probe_lazy_gibbs(d, k, size, rng)
            case ProbeFlavor.MH:
                bad += _probe_mh(k, size, rng, gamma, kernel, start)

    estimate = bernoulli_estimate(bad, n, confidence)
    return ProbeResult(flavor=flavor, d=d, k=k, estimate=estimate, bound=bound, intermediate_bound=intermediate, gamma=gamma)
