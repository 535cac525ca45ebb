"""
Metropolis-Hastings kernels and samplers, the finite Metropolization used by
the zoo, the acceptance constant gamma, and the skeleton of distinct moves.
"""

from __future__ import annotations

import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Iterator, Optional

import numpy as np
from scipy.stats import geom, multivariate_normal

from mixhit.applib.config import config
from mixhit.applib.errors import HoldingCapExceeded, NonFiniteDensity
from mixhit.applib.models.distributions import FiniteKernel
from mixhit.applib.models.estimates import McEstimate
from mixhit.estimators import hoeffding_halfwidth
from mixhit.kernels.core import finite_kernel, prob_vector
from mixhit.sampling.base import KernelSampler, MarkovSampler, StateDescriptor

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Proposal:
    sample: Callable[[Any, np.random.Generator], Any]  # y ~ q_x
    log_density: Callable[[Any, Any], float]         # (x, y) -> log q_x(y)
    symmetric: bool = False


def gaussian_random_walk(sigma: float, dimension: int = 1) -> Proposal:
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    cov = sigma**2 * np.eye(dimension)

    def sample(x, rng):
        return np.asarray(x, dtype=float) + sigma * rng.standard_normal(dimension)

    def log_density(x, y):
        return float(multivariate_normal.logpdf(np.asarray(y) - np.asarray(x), mean=np.zeros(dimension), cov=cov))

    return Proposal(sample=sample, log_density=log_density, symmetric=True)


def independence_proposal(sample: Callable[[np.random.Generator], Any], log_density: Callable[[Any], float]) -> Proposal:
    """q_x = q for every x."""
    return Proposal(sample=lambda x, rng: sample(rng), log_density=lambda x, y: log_density(y))


def finite_proposal(q: np.ndarray) -> Proposal:
    q = np.asarray(q, dtype=float)
    cumulative = np.cumsum(q, axis=1)

    def sample(x, rng):
        return int(min(np.searchsorted(cumulative[x], rng.random() * cumulative[x, -1], side="right"), q.shape[0] - 1))

    def log_density(x, y):
        return math.log(q[x, y]) if q[x, y] > 0 else -math.inf

    return Proposal(sample=sample, log_density=log_density, symmetric=bool(np.allclose(q, q.T)))


@dataclass(frozen=True)
class MhKernel:
    target_log_density: Callable[[Any], float]
    proposal: Proposal

    def _log_target(self, x) -> float:
        value = float(self.target_log_density(x))
        if math.isnan(value) or value == math.inf:
            raise NonFiniteDensity(f"log-density {value} at {x!r}")
        return value

    def log_acceptance(self, x, y) -> float:
        """log beta(x, y) = min(0, log rho(y) q_y(x) - log rho(x) q_x(y))."""
        lx = self._log_target(x)
        if lx == -math.inf:
            raise NonFiniteDensity(f"zero target density at visited point {x!r}")
        ly = self._log_target(y)
        if ly == -math.inf:
            return -math.inf
        ratio = ly - lx
        if not self.proposal.symmetric:
            forward = self.proposal.log_density(x, y)
            backward = self.proposal.log_density(y, x)
            if backward == -math.inf:
                return -math.inf
            ratio += backward - forward
        return min(0.0, ratio)

    def acceptance(self, x, y) -> float:
        return math.exp(self.log_acceptance(x, y))


class MhSampler(KernelSampler):
    def __init__(self, kernel: MhKernel, descriptor: StateDescriptor):
        self.kernel = kernel
        self.descriptor = descriptor

    def transition(self, state, rng: np.random.Generator):
        proposed = self.kernel.proposal.sample(state, rng)
        if rng.random() < self.kernel.acceptance(state, proposed):
            return proposed
        return state


def make_mh(
    target_log_density: Callable[[Any], float],
    proposal: Proposal,
    dimension: int = 1,
    n_states: Optional[int] = None,
) -> tuple[MhKernel, MhSampler]:
    kernel = MhKernel(target_log_density=target_log_density, proposal=proposal)
    return kernel, MhSampler(kernel, StateDescriptor(dimension=dimension, n_states=n_states))


def estimate_gamma(
    mh: MhKernel,
    probe_points: Iterable[Any],
    n_mc: int,
    rng: np.random.Generator,
    delta: float = 0.01,
) -> McEstimate:
    """
    min over probes of the Monte Carlo acceptance integral int q_x(y) beta(x, y) dy.
    `lower` is the lower confidence value; a minimum over finitely many probes
    can only overstate the true infimum.
    """
    probes = list(probe_points)
    if not probes:
        raise ValueError("estimate_gamma needs at least one probe point")
    means = []
    for x in probes:
        accepted = [mh.acceptance(x, mh.proposal.sample(x, rng)) for _ in range(n_mc)]
        means.append(float(np.mean(accepted)))
    halfwidth = hoeffding_halfwidth(n_mc, delta / len(probes))
    return McEstimate(point=min(means), halfwidth=halfwidth, confidence=1 - delta, n_samples=n_mc * len(probes))


# === Finite Metropolis-Hastings ===

def metropolize(weights, proposal) -> FiniteKernel:
    """The finite MH kernel of target `weights` under proposal matrix q; reversible w.r.t. the weights."""
    w = np.asarray(weights, dtype=float)
    if np.any(w <= 0):
        raise ValueError("target weights must be positive")
    pi = w / w.sum()
    q = np.asarray(proposal, dtype=float)
    q = q / q.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = (pi[None, :] * q.T) / (pi[:, None] * q)
    moves = np.where(q > 0, q * np.minimum(1.0, np.nan_to_num(ratio, nan=0.0)), 0.0)
    np.fill_diagonal(moves, 0.0)
    np.fill_diagonal(moves, 1.0 - moves.sum(axis=1))
    return finite_kernel(moves, stationary=prob_vector(pi))


def exact_holding_rates(kernel: FiniteKernel) -> np.ndarray:
    """lambda(x) = P_x(X_1 != x) = 1 - P_xx."""
    return 1.0 - np.diag(kernel.matrix)


def finite_gamma(proposal, weights) -> float:
    """gamma = min_x P_x(move) for the finite MH kernel."""
    return float(exact_holding_rates(metropolize(weights, proposal)).min())


# === Skeleton of distinct moves ===

def same_state(x, y) -> bool:
    return bool(np.array_equal(np.asarray(x), np.asarray(y)))


@dataclass
class MhSkeleton:
    """
    Pairs (Y_i, eta_i): eta_0 = 0 and eta_{i+1} = min{t > eta_i : X_t != X_{eta_i}},
    Y_i = X_{eta_i}.
    """
    sampler: MarkovSampler
    holding_cap: int = field(default_factory=lambda: config.HOLDING_CAP)

    def iter_pairs(self, start, rng: np.random.Generator) -> Iterator[tuple[Any, int]]:
        path = self.sampler.iter_path(start, rng)
        current = next(path)
        eta = 0
        yield current, eta
        held = 0
        for t, x in enumerate(path, start=1):
            if same_state(x, current):
                held += 1
                if held >= self.holding_cap:
                    raise HoldingCapExceeded(f"chain held at {current!r} for {held} steps")
                continue
            current, eta, held = x, t, 0
            yield current, eta

    def pairs(self, start, n: int, rng: np.random.Generator) -> list[tuple[Any, int]]:
        it = self.iter_pairs(start, rng)
        return [next(it) for _ in range(n + 1)]


def mh_skeleton(sampler: MarkovSampler, holding_cap: Optional[int] = None) -> MhSkeleton:
    if holding_cap is None:
        return MhSkeleton(sampler)
    return MhSkeleton(sampler, holding_cap)


def holding_times(pairs: list[tuple[Any, int]]) -> list[tuple[Any, int]]:
    """(Y_i, eta_{i+1} - eta_i) for every completed holding period."""
    return [(y, nxt - eta) for (y, eta), (_, nxt) in zip(pairs, pairs[1:])]


def lambda_hat(pairs: list[tuple[Any, int]]) -> dict:
    """Per-state geometric MLE of the holding rate: visits / total holding time (finite states only)."""
    visits: dict = defaultdict(int)
    total: dict = defaultdict(int)
    for y, dt in holding_times(pairs):
        key = int(y) if np.ndim(y) == 0 else tuple(np.asarray(y).tolist())
        visits[key] += 1
        total[key] += dt
    return {key: visits[key] / total[key] for key in visits}


def geometric_pmf(lam: float, n) -> np.ndarray:
    """L_lambda(n) = lambda (1 - lambda)^(n-1) on n = 1, 2, ..."""
    return geom.pmf(n, lam)


@dataclass(frozen=True)
class CoreSet:
    """A = {x : L_{lambda(x)}({n : (x, n) in A'}) >= (1 - delta) alpha} for A' in X x N."""
    indicator: Callable[[Any, int], bool]
    lam: Callable[[Any], float]
    delta: float
    alpha: float
    tail: float = 1e-15

    def mass(self, x) -> float:
        rate = float(self.lam(x))
        if rate >= 1.0:
            n_max = 1
        else:
            n_max = max(1, math.ceil(math.log(self.tail) / math.log1p(-rate)))
        ns = np.arange(1, min(n_max, config.HOLDING_CAP) + 1)
        keep = np.array([bool(self.indicator(x, int(n))) for n in ns])
        return float(geometric_pmf(rate, ns)[keep].sum())

    def __call__(self, x) -> bool:
        return self.mass(x) >= (1.0 - self.delta) * self.alpha


def core_set(
    indicator: Callable[[Any, int], bool],
    lam: Callable[[Any], float],
    delta: float,
    alpha: float,
) -> CoreSet:
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    if not 0.0 < alpha < 0.5:
        raise ValueError("alpha must lie in (0, 1/2)")
    return CoreSet(indicator=indicator, lam=lam, delta=delta, alpha=alpha)
