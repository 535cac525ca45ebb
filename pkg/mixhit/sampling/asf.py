"""
Almost-strong-Feller decompositions of the k-skeleton of a lazy chain,
g_L^(k) = (1 - p) G1 + p G2, for random-scan Gibbs and Metropolis-Hastings.

G1 is the law of a step conditioned on the good event, G2 conditioned on
the bad event, and p is the probability of the bad event:
  gibbs: the index window i_0 .. i_{L(k)} misses some coordinate
  mh:    the chain never moves, X_0 = X_1 = ... = X_{L(k)}
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass
from typing import Any, Iterable, Optional, Sequence

import numpy as np
from scipy.stats import chi2

from mixhit.applib.errors import RejectionCapExceeded
from mixhit.applib.models.estimates import McEstimate
from mixhit.applib.types import AsfFlavor
from mixhit.estimators import bernoulli_estimate, lazy_gibbs_bounds, mh_bound
from mixhit.sampling.base import KernelSampler, MarkovSampler
from mixhit.sampling.gibbs import GibbsSampler
from mixhit.sampling.mh import same_state
from mixhit.sampling.timechange import lazy_clock

logger = logging.getLogger(__name__)

MAX_REJECTIONS = 1_000_000


@dataclass(frozen=True)
class SkeletonDraw:
    """One step of g_L^(k) together with the bad-event tag."""
    state: Any
    bad: bool
    indices: Optional[tuple[int, ...]] = None  # gibbs only: i_0 .. i_{L(k)}


def draw_skeleton_step(sampler: KernelSampler, flavor: AsfFlavor, k: int, x, rng: np.random.Generator) -> SkeletonDraw:
    """
    One step of g_L^(k) from x: L(k) ~ Binomial(k, 1/2) base moves, tagged bad or good.

    For MH the bad event includes an empty window L(k) = 0, so even a proposal that is
    always accepted stays put with probability 2^-k. That vanishes as k grows but is
    not 0 at any fixed k.
    """
    steps = int(lazy_clock(rng, 1, k)[0, -1])
    if flavor == AsfFlavor.GIBBS:
        d = sampler.kernel.dimension
        updates = [sampler.draw_update(rng) for _ in range(steps + 1)]
        y = np.asarray(x, dtype=float)
        for i, u in updates[:steps]:
            y = sampler.kernel.forward(y, i, u)
        indices = tuple(i for i, _ in updates)
        return SkeletonDraw(state=y, bad=len(set(indices)) < d, indices=indices)

    y = x
    moved = False
    for _ in range(steps):
        nxt = sampler.transition(y, rng)
        moved = moved or not same_state(nxt, y)
        y = nxt
    return SkeletonDraw(state=y, bad=not moved)


class SkeletonStepSampler(KernelSampler):
    """The unconditional chain g_L^(k)."""

    def __init__(self, base: KernelSampler, flavor: AsfFlavor, k: int):
        self.base = base
        self.flavor = flavor
        self.k = k
        self.descriptor = base.descriptor

    def transition(self, state, rng: np.random.Generator):
        return draw_skeleton_step(self.base, self.flavor, self.k, state, rng).state


class ConditionalStepSampler(SkeletonStepSampler):
    """g_L^(k) conditioned on the good event (G1) or the bad event (G2), by rejection."""

    def __init__(self, base: KernelSampler, flavor: AsfFlavor, k: int, bad: bool, max_attempts: int = MAX_REJECTIONS):
        super().__init__(base, flavor, k)
        self.bad = bad
        self.max_attempts = max_attempts

    def transition(self, state, rng: np.random.Generator):
        for _ in range(self.max_attempts):
            draw = draw_skeleton_step(self.base, self.flavor, self.k, state, rng)
            if draw.bad == self.bad:
                return draw.state
        raise RejectionCapExceeded(f"{'bad' if self.bad else 'good'} event not seen in {self.max_attempts} attempts")


@dataclass(frozen=True)
class AsfDecomposition:
    flavor: AsfFlavor
    k: int
    event_indicator: np.ndarray  # per simulated trajectory: True on the bad event
    p_estimate: McEstimate
    g1_sampler: MarkovSampler
    g2_sampler: MarkovSampler
    C_target: float  # 1 / (upper confidence value of p)
    bound: Optional[float] = None

    @property
    def p(self) -> float:
        return self.p_estimate.point

    @property
    def within_bound(self) -> Optional[bool]:
        if self.bound is None:
            return None
        return self.p_estimate.point - 3.0 * self.p_estimate.halfwidth <= self.bound


def asf_decompose(
    sampler: KernelSampler,
    flavor: AsfFlavor | str,
    k: int,
    n_mc: int,
    rng: np.random.Generator,
    start: Any,
    gamma: Optional[float] = None,
    confidence: float = 0.99,
) -> AsfDecomposition:
    flavor = AsfFlavor(flavor)
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if flavor == AsfFlavor.GIBBS and not isinstance(sampler, GibbsSampler):
        raise TypeError("the gibbs decomposition needs a GibbsSampler")

    events = np.array([draw_skeleton_step(sampler, flavor, k, start, rng).bad for _ in range(n_mc)], dtype=bool)
    estimate = bernoulli_estimate(int(events.sum()), n_mc, confidence)

    if flavor == AsfFlavor.GIBBS:
        _, bound = lazy_gibbs_bounds(sampler.kernel.dimension, k)
    else:
        bound = None if gamma is None else mh_bound(gamma, k)
    logger.info("%s decomposition at k=%d: p=%.4g +- %.2g (bound %s)", flavor.value, k, estimate.point, estimate.halfwidth, bound)

    return AsfDecomposition(
        flavor=flavor,
        k=k,
        event_indicator=events,
        p_estimate=estimate,
        g1_sampler=ConditionalStepSampler(sampler, flavor, k, bad=False),
        g2_sampler=ConditionalStepSampler(sampler, flavor, k, bad=True),
        C_target=1.0 / estimate.upper,
        bound=bound,
    )


# === Index reversal ===

def reversal(j: Sequence[int], m: int) -> tuple[int, ...]:
    """w_m(J) = (J[m], J[m-1], ..., J[0])."""
    if len(j) < m + 1:
        raise ValueError(f"sequence of length {len(j)} is too short to reverse at m={m}")
    return tuple(j[m::-1])


def index_windows(d: int, k: int, n: int, rng: np.random.Generator) -> list[tuple[tuple[int, ...], bool]]:
    """n draws of the lazy Gibbs index window (i_0 .. i_{L(k)}) with its bad-event tag."""
    last = lazy_clock(rng, n, k)[:, -1]
    indices = rng.integers(d, size=(n, k + 1))
    windows = []
    for row, m in zip(indices, last):
        window = tuple(int(i) for i in row[: m + 1])
        windows.append((window, len(set(window)) < d))
    return windows


def reversal_symmetry_test(sequences: Iterable[Sequence[int]]) -> float:
    """
    p-value of a Bowker-type symmetry test: counts of J against counts of
    w_{len(J)-1}(J), one chi-square degree of freedom per non-palindromic pair.
    """
    counts = Counter(tuple(s) for s in sequences)
    statistic, dof, seen = 0.0, 0, set()
    for j, n_j in counts.items():
        w = reversal(j, len(j) - 1)
        if w == j or j in seen:
            continue
        seen.update((j, w))
        n_w = counts.get(w, 0)
        statistic += (n_j - n_w) ** 2 / (n_j + n_w)
        dof += 1
    if dof == 0:
        return 1.0
    return float(chi2.sf(statistic, dof))
