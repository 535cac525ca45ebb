"""
Exact kernel transformations: lazy, k-skeleton, trace on a watched set,
the composite G = lazy(skeleton_k(lazy(P))), maximal couplings and
uniform perturbations.
"""

from __future__ import annotations

import logging

import numpy as np
from scipy import linalg
from scipy.sparse import csgraph
from scipy.stats import binom

from mixhit.applib.errors import AbsorbingComplement, DimensionMismatch, InvalidKernel
from mixhit.applib.models.distributions import CouplingMatrix, FiniteKernel, ProbVector, TraceSpec
from mixhit.kernels.core import finite_kernel, prob_vector

logger = logging.getLogger(__name__)


def lazy(kernel: FiniteKernel) -> FiniteKernel:
    m = 0.5 * kernel.matrix + 0.5 * np.eye(kernel.n)
    return finite_kernel(m, kernel.labels, stationary=kernel.cached_stationary)


def skeleton(kernel: FiniteKernel, k: int) -> FiniteKernel:
    if k < 1:
        raise ValueError(f"skeleton step must be >= 1, got {k}")
    m = np.linalg.matrix_power(kernel.matrix, k)
    return finite_kernel(m, kernel.labels, stationary=kernel.cached_stationary)


def build_G(kernel: FiniteKernel, k: int) -> FiniteKernel:
    """
    lazy(skeleton(lazy(P), k)).
    The order matters: the skeleton and lazy transformations do not commute in general.
    """
    return lazy(skeleton(lazy(kernel), k))


def binomial_lazy_power(kernel: FiniteKernel, t: int) -> FiniteKernel:
    """sum_s Binomial(t, 1/2)(s) P^s, which equals lazy(P)^t."""
    if t < 0:
        raise ValueError("t must be non-negative")
    weights = binom.pmf(np.arange(t + 1), t, 0.5)
    power = np.eye(kernel.n)
    acc = np.zeros_like(power)
    for s, w in enumerate(weights):
        acc += w * power
        if s < t:
            power = power @ kernel.matrix
    return finite_kernel(acc, kernel.labels, stationary=kernel.cached_stationary)


# === Trace chains ===

def _split(kernel: FiniteKernel, spec: TraceSpec) -> tuple[np.ndarray, np.ndarray]:
    watched = np.array(spec.subset, dtype=int)
    if watched[-1] >= kernel.n:
        raise DimensionMismatch(f"trace subset mentions state {watched[-1]} of a {kernel.n}-state kernel")
    outside = np.setdiff1d(np.arange(kernel.n), watched)
    return watched, outside


def _excursion_exits(kernel: FiniteKernel, spec: TraceSpec, watched: np.ndarray, outside: np.ndarray) -> np.ndarray:
    """
    Row c gives the law of the first watched state hit from outside state c:
    (I - P_CC)^{-1} P_CS.
    """
    p = kernel.matrix
    # Which states can reach the watched set: BFS from S over reversed edges
    dist = csgraph.shortest_path((p.T > 0).astype(float), directed=True, unweighted=True, indices=watched)
    reaches = np.isfinite(np.atleast_2d(dist)).any(axis=0)
    stuck = outside[~reaches[outside]]
    if stuck.size:
        raise AbsorbingComplement(f"states {stuck.tolist()} never return to the watched set")

    a = np.eye(outside.size) - p[np.ix_(outside, outside)]
    if linalg.svdvals(a).min() < spec.complement_solver_tol:
        raise AbsorbingComplement("excursion solve is numerically singular")
    return linalg.solve(a, p[np.ix_(outside, watched)])


def trace_exact(kernel: FiniteKernel, spec: TraceSpec) -> FiniteKernel:
    """Q = P_SS + P_SC (I - P_CC)^{-1} P_CS, the chain watched only on S."""
    watched, outside = _split(kernel, spec)
    p = kernel.matrix
    q = p[np.ix_(watched, watched)]
    if outside.size:
        q = q + p[np.ix_(watched, outside)] @ _excursion_exits(kernel, spec, watched, outside)

    labels = tuple(kernel.labels[i] for i in watched)
    stationary = None
    if kernel.cached_stationary is not None:
        restricted = kernel.cached_stationary.weights[watched]
        if restricted.sum() > 0:
            stationary = prob_vector(restricted / restricted.sum(), labels)
    try:
        return finite_kernel(q, labels, stationary=stationary)
    except InvalidKernel as e:
        raise AbsorbingComplement(f"trace kernel lost mass: {e}") from e


def entrance_distribution(kernel: FiniteKernel, spec: TraceSpec, start: int) -> ProbVector:
    """Law of the first visit to S (indexed over S) for a chain started at `start`."""
    watched, outside = _split(kernel, spec)
    if not 0 <= start < kernel.n:
        raise DimensionMismatch(f"start {start} outside 0..{kernel.n - 1}")
    labels = tuple(kernel.labels[i] for i in watched)
    w = np.zeros(watched.size)
    hit = np.searchsorted(watched, start)
    if hit < watched.size and watched[hit] == start:
        w[hit] = 1.0
        return prob_vector(w, labels)
    exits = _excursion_exits(kernel, spec, watched, outside)
    return prob_vector(exits[np.searchsorted(outside, start)], labels)


# === Couplings and perturbations ===

def maximal_coupling(mu: ProbVector, nu: ProbVector) -> CouplingMatrix:
    if mu.n != nu.n:
        raise DimensionMismatch(f"cannot couple distributions of sizes {mu.n} and {nu.n}")
    overlap = np.minimum(mu.weights, nu.weights)
    m = overlap.sum()
    joint = np.diag(overlap)
    if 1.0 - m > 1e-15:
        joint = joint + np.outer(mu.weights - overlap, nu.weights - overlap) / (1.0 - m)
    joint.setflags(write=False)
    return CouplingMatrix(joint=joint, mu=mu, nu=nu)


def perturb_within(kernel: FiniteKernel, delta: float) -> FiniteKernel:
    """(1 - delta) P + delta U with U uniform; every row moves by at most delta in total variation."""
    if not 0.0 <= delta <= 1.0:
        raise ValueError(f"delta must lie in [0, 1], got {delta}")
    m = (1.0 - delta) * kernel.matrix + delta / kernel.n
    return finite_kernel(m, kernel.labels)
