"""
Exact time quantities of finite chains: mixing times t_m, t-bar_m and t_L,
hitting-time moments and distributions, the maximum hitting time t_H(alpha),
the large hitting time tau_g(alpha), and the reports built from them.
"""

from __future__ import annotations

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy import linalg
from scipy.sparse import csgraph

from mixhit.applib.config import config
from mixhit.applib.errors import DimensionMismatch, NoFiniteTime, NonStationaryPi, TooManyStates
from mixhit.applib.models.distributions import FiniteKernel, ProbVector
from mixhit.applib.models.results import (
    EasyDirectionCertificate,
    EquivalenceReport,
    HittingResult,
    MaxHittingTime,
    MixingResult,
)
from mixhit.applib.types import HittingConvention
from mixhit.kernels.core import (
    check_reversible,
    contraction_profile,
    distance_at,
    stationarity_defect,
    stationary_distribution,
)
from mixhit.kernels.transforms import lazy

logger = logging.getLogger(__name__)

# Slack for d(t) <= eps and pi(A) >= alpha comparisons; exact ties are common on symmetric chains
COMPARE_SLACK = 1e-12
# Slack for inequality flags in reports and audits
REPORT_SLACK = 1e-9
STATIONARITY_TOLERANCE = 1e-9
DEFAULT_T_MAX = 10_000


# === Mixing times ===

def mixing_time(
    kernel: FiniteKernel,
    pi: ProbVector,
    epsilon: float = 0.25,
    standardized: bool = False,
    t_max: int = DEFAULT_T_MAX,
) -> MixingResult:
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    if t_max < 0:
        raise ValueError(f"t_max must be >= 0, got {t_max}")
    if stationarity_defect(kernel, pi) > STATIONARITY_TOLERANCE:
        raise NonStationaryPi(f"pi P differs from pi by {stationarity_defect(kernel, pi):.3g}")

    def mixed(t: int) -> bool:
        return distance_at(kernel, pi, t, standardized) <= epsilon + COMPARE_SLACK

    time: Optional[int] = None
    if mixed(0):
        time = 0
    elif t_max > 0:
        # Doubling bracket: lo fails, hi succeeds; hi never passes t_max
        lo, hi = 0, 1
        while not mixed(hi):
            if hi >= t_max:
                hi = None
                break
            lo, hi = hi, min(2 * hi, t_max)
        if hi is not None:
            while hi - lo > 1:
                mid = (lo + hi) // 2
                if mixed(mid):
                    hi = mid
                else:
                    lo = mid
            time = hi

    horizon = min(t_max if time is None else time, config.PROFILE_CAP)
    profile = contraction_profile(kernel, pi, horizon)
    if time is None:
        logger.debug("chain unmixed within t_max=%d at epsilon=%g", t_max, epsilon)
    return MixingResult(epsilon=epsilon, time=time, profile_used=profile, standardized=standardized, t_max=t_max)


# === Hitting times ===

def _normalize_target(kernel: FiniteKernel, target: Iterable[int]) -> np.ndarray:
    a = np.array(sorted({int(s) for s in target}), dtype=int)
    if a.size == 0:
        raise ValueError("target set must be non-empty")
    if a[0] < 0 or a[-1] >= kernel.n:
        raise DimensionMismatch(f"target mentions states outside 0..{kernel.n - 1}")
    return a


def _escape_states(kernel: FiniteKernel, in_target: np.ndarray) -> np.ndarray:
    """Mask of states from which the chain misses the target with positive probability."""
    p = kernel.matrix
    reversed_edges = (p.T > 0).astype(float)
    targets = np.flatnonzero(in_target)
    dist = csgraph.shortest_path(reversed_edges, directed=True, unweighted=True, indices=targets)
    reaches = np.isfinite(np.atleast_2d(dist)).any(axis=0)
    dead = ~reaches
    if not dead.any():
        return dead
    # Anything that can wander into a dead state while avoiding the target escapes too
    free = ~in_target
    sub = reversed_edges * free[None, :] * free[:, None]
    dist = csgraph.shortest_path(sub, directed=True, unweighted=True, indices=np.flatnonzero(dead))
    return np.isfinite(np.atleast_2d(dist)).any(axis=0) & free


def _inclusive_expectations(kernel: FiniteKernel, in_target: np.ndarray, escapes: np.ndarray) -> np.ndarray:
    h = np.zeros(kernel.n)
    h[escapes] = np.inf
    finite = np.flatnonzero(~in_target & ~escapes)
    if finite.size:
        a = np.eye(finite.size) - kernel.matrix[np.ix_(finite, finite)]
        h[finite] = linalg.solve(a, np.ones(finite.size))
    return h


def _inclusive_cdf(kernel: FiniteKernel, in_target: np.ndarray, horizon: int) -> np.ndarray:
    indicator = in_target.astype(float)
    q = indicator.copy()
    cdf = np.empty((kernel.n, horizon + 1))
    cdf[:, 0] = q
    for t in range(1, horizon + 1):
        q = indicator + (1.0 - indicator) * (kernel.matrix @ q)
        cdf[:, t] = q
    return cdf


def hitting_moments(
    kernel: FiniteKernel,
    target: Iterable[int],
    horizon: int = 0,
    convention: HittingConvention = HittingConvention.INCLUSIVE,
) -> HittingResult:
    a = _normalize_target(kernel, target)
    if horizon < 0:
        raise ValueError("horizon must be non-negative")
    in_target = np.zeros(kernel.n, dtype=bool)
    in_target[a] = True

    escapes = _escape_states(kernel, in_target)
    if escapes.any():
        logger.warning("target %s is missed with positive probability from states %s", a.tolist(), np.flatnonzero(escapes).tolist())
    h = _inclusive_expectations(kernel, in_target, escapes)

    if convention == HittingConvention.INCLUSIVE:
        expected = h
        cdf = _inclusive_cdf(kernel, in_target, horizon)
    else:
        # One forced step, then the inclusive time from wherever the chain landed
        p = kernel.matrix
        finite = np.isfinite(h)
        expected = 1.0 + p[:, finite] @ h[finite]
        expected[(p[:, ~finite] > 0).any(axis=1)] = np.inf
        inclusive = _inclusive_cdf(kernel, in_target, max(horizon - 1, 0))
        cdf = np.zeros((kernel.n, horizon + 1))
        if horizon:
            cdf[:, 1:] = p @ inclusive[:, :horizon]

    expected.setflags(write=False)
    cdf = np.clip(cdf, 0.0, 1.0)
    cdf.setflags(write=False)
    return HittingResult(target_set=tuple(a.tolist()), expected=expected, cdf=cdf, convention=convention)


# === Feasible sets ===

def minimal_feasible_sets(pi: ProbVector, alpha: float) -> list[tuple[int, ...]]:
    """Inclusion-minimal sets A with pi(A) >= alpha, by increasing size."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    w = pi.weights
    found = []
    for size in range(1, pi.n + 1):
        for subset in itertools.combinations(range(pi.n), size):
            masses = w[list(subset)]
            mass = masses.sum()
            if mass >= alpha - COMPARE_SLACK and mass - masses.min() < alpha - COMPARE_SLACK:
                found.append(subset)
    return found


def _candidate_sets(
    kernel: FiniteKernel,
    pi: ProbVector,
    alpha: float,
    family: Optional[Sequence[Sequence[int]]],
) -> tuple[list[tuple[int, ...]], bool]:
    if pi.n != kernel.n:
        raise DimensionMismatch(f"distribution has {pi.n} states, kernel has {kernel.n}")
    if family is None:
        if kernel.n > config.ENUMERATION_CAP:
            raise TooManyStates(f"{kernel.n} states exceed the enumeration cap {config.ENUMERATION_CAP}; supply a candidate family")
        return minimal_feasible_sets(pi, alpha), False

    sets = [tuple(sorted({int(s) for s in a})) for a in family]
    sets = [a for a in sets if a and pi.mass(a) >= alpha - COMPARE_SLACK]
    if not sets:
        raise ValueError(f"no member of the candidate family has stationary mass >= {alpha}")
    logger.warning("searching %d caller-supplied sets; the result is a lower bound", len(sets))
    return sets, True


def max_hitting_time(
    kernel: FiniteKernel,
    pi: ProbVector,
    alpha: float,
    family: Optional[Sequence[Sequence[int]]] = None,
    convention: HittingConvention = HittingConvention.INCLUSIVE,
) -> MaxHittingTime:
    """sup of E_x[tau_A] over starts x and sets A with pi(A) >= alpha."""
    sets, lower_bound = _candidate_sets(kernel, pi, alpha, family)

    def worst_start(a: tuple[int, ...]) -> tuple[float, int]:
        expected = hitting_moments(kernel, a, 0, convention).expected
        x = int(np.argmax(expected))
        return float(expected[x]), x

    with ThreadPoolExecutor(max_workers=config.THREADS) as pool:
        results = list(pool.map(worst_start, sets))

    # First maximum in enumeration order keeps the witness independent of the thread count
    best = max(range(len(sets)), key=lambda i: (results[i][0], -i))
    t_h, start = results[best]
    return MaxHittingTime(t_H=t_h, witness_set=sets[best], witness_start=start, n_sets=len(sets), lower_bound=lower_bound)


def large_hitting_time(
    kernel: FiniteKernel,
    pi: ProbVector,
    alpha: float,
    threshold: float = 0.9,
    family: Optional[Sequence[Sequence[int]]] = None,
    convention: HittingConvention = HittingConvention.INCLUSIVE,
    cap: Optional[int] = None,
) -> int:
    """Smallest t with min over feasible A and starts x of P_x(tau_A <= t) strictly above threshold."""
    sets, _ = _candidate_sets(kernel, pi, alpha, family)
    cap = config.HITTING_HORIZON_CAP if cap is None else cap

    indicator = np.zeros((len(sets), kernel.n))
    for i, a in enumerate(sets):
        indicator[i, list(a)] = 1.0
    # Row i of q is x -> P_x(tau_{A_i} <= t) under the inclusive convention
    q = indicator.copy()
    p_t = kernel.matrix.T

    for t in range(cap + 1):
        if convention == HittingConvention.INCLUSIVE:
            worst = q.min()
        else:
            worst = 0.0 if t == 0 else (q_prev @ p_t).min()
        if worst > threshold:
            return t
        q_prev = q
        q = indicator + (1.0 - indicator) * (q @ p_t)
    raise NoFiniteTime(f"no t <= {cap} has worst-case hitting probability above {threshold}")


# === Reports ===

def easy_direction_constants(alpha: float) -> tuple[int, int]:
    """C = ceil(-log2(alpha) + 1) and k0 = ceil(ln 10 / -ln(1 - alpha/2))."""
    c = math.ceil(-math.log2(alpha) + 1)
    k0 = math.ceil(math.log(10) / -math.log(1 - alpha / 2))
    return c, k0


def easy_direction_certificate(
    kernel: FiniteKernel,
    pi: ProbVector,
    alpha: float,
    t_L: Optional[MixingResult] = None,
    t_H: Optional[float] = None,
    epsilon: float = 0.25,
) -> EasyDirectionCertificate:
    """
    Walk the constructive argument for l_H(alpha) <= 2 k0 C t_L:
    the lazy chain is within alpha/2 of pi at time C t_L, and the maximum
    hitting time of the lazy chain stays below 2 k0 C t_L.
    """
    c, k0 = easy_direction_constants(alpha)
    lazy_kernel = lazy(kernel)
    if t_L is None:
        t_L = mixing_time(lazy_kernel, pi, epsilon)
    if t_L.time is None:
        return EasyDirectionCertificate(alpha=alpha, C=c, k0=k0, t_L=None, t_H=t_H, vacuous=True)

    horizon = c * t_L.time
    d_at_t = distance_at(lazy_kernel, pi, horizon)
    d_ok = d_at_t <= alpha / 2 + COMPARE_SLACK
    l_h = max_hitting_time(lazy_kernel, pi, alpha).t_H
    bound = 2 * k0 * c * t_L.time
    return EasyDirectionCertificate(
        alpha=alpha,
        C=c,
        k0=k0,
        t_L=t_L.time,
        T=horizon,
        d_at_T=d_at_t,
        d_ok=d_ok,
        l_H=l_h,
        t_H=t_H,
        bound=bound,
        passed=bool(d_ok and l_h <= bound + REPORT_SLACK),
    )


def _mixequivalent(t_m: MixingResult, t_bar_m: MixingResult) -> bool:
    if t_m.time is None:
        return t_bar_m.time is None
    if t_bar_m.time is None:
        return 2 * t_m.time > t_bar_m.t_max
    return t_m.time <= t_bar_m.time <= 2 * t_m.time


def equivalence_report(
    kernel: FiniteKernel,
    alpha: float,
    epsilon: float = 0.25,
    chain_id: str = "chain",
    pi: Optional[ProbVector] = None,
    t_max: int = DEFAULT_T_MAX,
) -> EquivalenceReport:
    pi = pi if pi is not None else stationary_distribution(kernel)
    reversible = check_reversible(kernel, pi, tol=1e-10)
    if not reversible:
        logger.warning("%s is not reversible; the equivalence report is computed anyway", chain_id)

    t_m = mixing_time(kernel, pi, epsilon, standardized=False, t_max=t_max)
    t_bar_m = mixing_time(kernel, pi, epsilon, standardized=True, t_max=t_max)
    t_l = mixing_time(lazy(kernel), pi, epsilon, standardized=False, t_max=t_max)
    hit = max_hitting_time(kernel, pi, alpha)
    tau_g = large_hitting_time(kernel, pi, alpha)

    unmixed = t_m.unmixed or t_l.unmixed
    ratio = None if unmixed else t_l.time / max(hit.t_H, 1.0)
    maxlarge_ok = 0.1 * tau_g <= hit.t_H + REPORT_SLACK and hit.t_H <= 2 * tau_g + REPORT_SLACK
    certificate = easy_direction_certificate(kernel, pi, alpha, t_L=t_l, t_H=hit.t_H, epsilon=epsilon)
    logger.info("%s: t_m=%s t_L=%s t_H=%.6g tau_g=%d", chain_id, t_m.time, t_l.time, hit.t_H, tau_g)

    return EquivalenceReport(
        chain_id=chain_id,
        n=kernel.n,
        alpha=alpha,
        epsilon=epsilon,
        t_m=t_m,
        t_bar_m=t_bar_m,
        t_L=t_l,
        t_H=hit.t_H,
        tau_g=tau_g,
        witness_set=hit.witness_set,
        witness_start=hit.witness_start,
        ratio=ratio,
        unmixed=unmixed,
        reversible=reversible,
        maxlarge_ok=bool(maxlarge_ok),
        mixequivalent_ok=_mixequivalent(t_m, t_bar_m),
        certificate=certificate,
    )
