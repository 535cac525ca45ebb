"""
Finite-state kernels: distributions, total variation, stationarity,
reversibility and the contraction profiles d(t), d-bar(t).
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from pydantic import ValidationError
from scipy import linalg
from scipy.spatial.distance import pdist

from mixhit.applib.errors import (
    DimensionMismatch,
    InvalidDistribution,
    InvalidKernel,
    NonUniqueStationary,
    ZeroMassState,
)
from mixhit.applib.models.distributions import FiniteKernel, ProbVector
from mixhit.applib.models.results import ContractionProfile

logger = logging.getLogger(__name__)

# Singular values of (P^T - I) below RANK_TOLERANCE * n count towards the fixed-point space
RANK_TOLERANCE = 1e-10
CLAMP_TOLERANCE = 1e-14


# === Constructors ===

def prob_vector(weights, labels: Optional[Sequence[str]] = None) -> ProbVector:
    try:
        return ProbVector(weights=weights, labels=None if labels is None else tuple(labels))
    except ValidationError as e:
        raise InvalidDistribution(str(e)) from e


def point_mass(n: int, i: int) -> ProbVector:
    if not 0 <= i < n:
        raise InvalidDistribution(f"state {i} outside 0..{n - 1}")
    w = np.zeros(n)
    w[i] = 1.0
    return prob_vector(w)


def uniform(n: int) -> ProbVector:
    return prob_vector(np.full(n, 1.0 / n))


def finite_kernel(matrix, labels: Optional[Sequence[str]] = None, stationary: Optional[ProbVector] = None) -> FiniteKernel:
    try:
        return FiniteKernel(
            matrix=matrix,
            labels=None if labels is None else tuple(str(s) for s in labels),
            cached_stationary=stationary,
        )
    except ValidationError as e:
        raise InvalidKernel(str(e)) from e


def _weights(x: ProbVector | np.ndarray) -> np.ndarray:
    return x.weights if isinstance(x, ProbVector) else np.asarray(x, dtype=float)


def _check_dims(kernel: FiniteKernel, pi: ProbVector) -> None:
    if pi.n != kernel.n:
        raise DimensionMismatch(f"distribution has {pi.n} states, kernel has {kernel.n}")


# === Total variation ===

def tv_distance(mu: ProbVector, nu: ProbVector) -> float:
    a, b = _weights(mu), _weights(nu)
    if a.shape != b.shape:
        raise DimensionMismatch(f"cannot compare distributions of sizes {a.size} and {b.size}")
    return float(min(1.0, 0.5 * np.abs(a - b).sum()))


def _worst_distances(rows: np.ndarray, pi: np.ndarray) -> tuple[float, float]:
    """(max_x ||rows[x] - pi||, max_{x,y} ||rows[x] - rows[y]||) in total variation."""
    d = float(0.5 * np.abs(rows - pi).sum(axis=1).max())
    dbar = float(0.5 * pdist(rows, metric="cityblock").max()) if rows.shape[0] > 1 else 0.0
    return min(d, 1.0), min(dbar, 1.0)


# === Stationarity and reversibility ===

def stationary_distribution(kernel: FiniteKernel) -> ProbVector:
    if kernel.cached_stationary is not None:
        return kernel.cached_stationary

    n = kernel.n
    a = kernel.matrix.T - np.eye(n)
    singular = linalg.svdvals(a)
    nullity = int(np.sum(singular <= RANK_TOLERANCE * n))
    if nullity > 1:
        raise NonUniqueStationary(f"fixed-point space has dimension {nullity}; the chain is reducible")

    system = np.vstack([a, np.ones((1, n))])
    rhs = np.zeros(n + 1)
    rhs[-1] = 1.0
    x, *_ = linalg.lstsq(system, rhs)
    x = np.where(x < CLAMP_TOLERANCE, 0.0, x)
    logger.debug("stationary solve on %d states, residual %.3g", n, np.abs(x @ kernel.matrix - x).max())
    return prob_vector(x / x.sum(), kernel.labels)


def with_stationary(kernel: FiniteKernel, pi: Optional[ProbVector] = None) -> FiniteKernel:
    """The same kernel with its stationary distribution cached."""
    pi = pi if pi is not None else stationary_distribution(kernel)
    _check_dims(kernel, pi)
    return kernel.model_copy(update={"cached_stationary": pi})


def stationarity_defect(kernel: FiniteKernel, pi: ProbVector) -> float:
    _check_dims(kernel, pi)
    return float(np.abs(pi.weights @ kernel.matrix - pi.weights).max())


def check_reversible(kernel: FiniteKernel, pi: ProbVector, tol: float = 1e-12) -> bool:
    _check_dims(kernel, pi)
    flow = pi.weights[:, None] * kernel.matrix
    return bool(np.abs(flow - flow.T).max() <= tol)


def reversibilize(kernel: FiniteKernel, pi: ProbVector) -> FiniteKernel:
    """Additive reversibilization (P + P*) / 2 with P*_ij = pi_j P_ji / pi_i."""
    _check_dims(kernel, pi)
    w = pi.weights
    if np.any(w <= 0):
        raise ZeroMassState(f"state {int(np.argmin(w))} has zero stationary mass")
    adjoint = (kernel.matrix.T * w[None, :]) / w[:, None]
    return finite_kernel(0.5 * (kernel.matrix + adjoint), kernel.labels, stationary=pi)


# === Evolution and contraction ===

def iterate_distribution(kernel: FiniteKernel, start: ProbVector, t: int) -> ProbVector:
    if t < 0:
        raise ValueError("t must be non-negative")
    if start.n != kernel.n:
        raise DimensionMismatch(f"start has {start.n} states, kernel has {kernel.n}")
    x = start.weights
    for _ in range(t):
        x = x @ kernel.matrix
    return prob_vector(np.clip(x, 0.0, None), start.labels)


def contraction_profile(kernel: FiniteKernel, pi: ProbVector, horizon: int) -> ContractionProfile:
    _check_dims(kernel, pi)
    if horizon < 0:
        raise ValueError("horizon must be non-negative")

    # Row x of `rows` is delta_x P^t, advanced one step at a time
    rows = np.eye(kernel.n)
    d_values, dbar_values = [], []
    for t in range(horizon + 1):
        d, dbar = _worst_distances(rows, pi.weights)
        d_values.append(d)
        dbar_values.append(dbar)
        if t < horizon:
            rows = rows @ kernel.matrix
    return ContractionProfile(horizon=horizon, d_values=tuple(d_values), dbar_values=tuple(dbar_values))


def distance_at(kernel: FiniteKernel, pi: ProbVector, t: int, standardized: bool = False) -> float:
    """d(t), or d-bar(t) when standardized, from one exact matrix power."""
    _check_dims(kernel, pi)
    rows = np.linalg.matrix_power(kernel.matrix, t)
    d, dbar = _worst_distances(rows, pi.weights)
    return dbar if standardized else d


def _boolean_power(pattern: np.ndarray, e: int) -> np.ndarray:
    result = np.eye(pattern.shape[0], dtype=bool)
    base = pattern.copy()
    while e:
        if e & 1:
            result = (result.astype(np.int64) @ base.astype(np.int64)) > 0
        base = (base.astype(np.int64) @ base.astype(np.int64)) > 0
        e >>= 1
    return result


def is_aperiodic(kernel: FiniteKernel) -> bool:
    """True iff the kernel is primitive: P^((n-1)^2 + 1) has no zero entry."""
    n = kernel.n
    return bool(_boolean_power(kernel.matrix > 0, (n - 1) ** 2 + 1).all())


# === Serialization ===

def kernel_to_json(kernel: FiniteKernel) -> str:
    return json.dumps({"labels": list(kernel.labels), "matrix": kernel.matrix.tolist()})


def kernel_from_json(text: str) -> FiniteKernel:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise InvalidKernel(f"kernel JSON does not parse: {e}") from e
    if not isinstance(data, dict) or "matrix" not in data:
        raise InvalidKernel('kernel JSON must be an object with a "matrix" entry')
    return finite_kernel(data["matrix"], data.get("labels"))


def kernel_to_text(kernel: FiniteKernel) -> str:
    lines = [str(kernel.n)]
    lines += [" ".join(f"{x:.17g}" for x in row) for row in kernel.matrix]
    return "\n".join(lines) + "\n"


def kernel_from_text(text: str) -> FiniteKernel:
    tokens = text.split()
    if not tokens:
        raise InvalidKernel("empty kernel file")
    try:
        n = int(tokens[0])
        values = [float(t) for t in tokens[1:]]
    except ValueError as e:
        raise InvalidKernel(f"kernel text does not parse: {e}") from e
    if n < 1 or len(values) != n * n:
        raise InvalidKernel(f"expected {n}x{n} entries after the size line, found {len(values)}")
    return finite_kernel(np.array(values).reshape(n, n))


def dump_kernel(kernel: FiniteKernel, path: str | Path) -> Path:
    path = Path(path)
    text = kernel_to_json(kernel) if path.suffix == ".json" else kernel_to_text(kernel)
    path.write_text(text)
    return path


def load_kernel(path: str | Path) -> FiniteKernel:
    path = Path(path)
    text = path.read_text()
    return kernel_from_json(text) if path.suffix == ".json" else kernel_from_text(text)
