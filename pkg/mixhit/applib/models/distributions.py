from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, field_serializer, field_validator, model_validator

# Rows/weights off by more than this are rejected; anything closer is renormalized
SUM_TOLERANCE = 1e-9
# Negative entries smaller than this in magnitude are float noise and clamped to zero
NEGATIVE_TOLERANCE = 1e-14


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def _default_labels(n: int) -> tuple[str, ...]:
    return tuple(str(i) for i in range(n))


# === ProbVector ===
# A finite probability distribution: mu, nu, pi and point masses.
class ProbVector(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    weights: np.ndarray
    labels: Optional[tuple[str, ...]] = None

    @field_validator("weights", mode="before")
    @classmethod
    def _check_weights(cls, value) -> np.ndarray:
        w = np.array(value, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("weights must be a non-empty 1-d vector")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        if np.any(w < -NEGATIVE_TOLERANCE):
            raise ValueError(f"negative weight {w.min():.3g}")
        w[w < 0] = 0.0
        total = w.sum()
        if abs(total - 1.0) > SUM_TOLERANCE:
            raise ValueError(f"weights sum to {total!r}, not 1")
        return _frozen(w / total)

    @model_validator(mode="after")
    def _check_labels(self) -> "ProbVector":
        if self.labels is not None and len(self.labels) != self.weights.size:
            raise ValueError("labels and weights differ in length")
        return self

    @field_serializer("weights")
    def _serialize_weights(self, w: np.ndarray) -> list[float]:
        return w.tolist()

    @property
    def n(self) -> int:
        return int(self.weights.size)

    def __len__(self) -> int:
        return self.n

    def mass(self, states) -> float:
        return float(self.weights[list(states)].sum())


# === FiniteKernel ===
# Row-stochastic matrix; row i is the one-step law from state i.
class FiniteKernel(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    matrix: np.ndarray
    labels: tuple[str, ...]
    cached_stationary: Optional[ProbVector] = None

    @model_validator(mode="before")
    @classmethod
    def _fill_labels(cls, data):
        if isinstance(data, dict) and data.get("labels") is None and "matrix" in data:
            data = dict(data)
            data["labels"] = _default_labels(len(data["matrix"]))
        return data

    @field_validator("matrix", mode="before")
    @classmethod
    def _check_matrix(cls, value) -> np.ndarray:
        m = np.array(value, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
            raise ValueError(f"matrix must be square and non-empty, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("matrix entries must be finite")
        if np.any(m < -NEGATIVE_TOLERANCE):
            raise ValueError(f"negative entry {m.min():.3g}")
        m[m < 0] = 0.0
        sums = m.sum(axis=1)
        bad = np.flatnonzero(np.abs(sums - 1.0) > SUM_TOLERANCE)
        if bad.size:
            raise ValueError(f"row {int(bad[0])} sums to {sums[bad[0]]!r}, not 1")
        return _frozen(m / sums[:, None])

    @model_validator(mode="after")
    def _check_shapes(self) -> "FiniteKernel":
        if len(self.labels) != self.matrix.shape[0]:
            raise ValueError("labels and matrix differ in size")
        if self.cached_stationary is not None and self.cached_stationary.n != self.matrix.shape[0]:
            raise ValueError("cached stationary distribution has the wrong dimension")
        return self

    @field_serializer("matrix")
    def _serialize_matrix(self, m: np.ndarray) -> list[list[float]]:
        return m.tolist()

    @property
    def n(self) -> int:
        return int(self.matrix.shape[0])

    def row(self, i: int) -> np.ndarray:
        return self.matrix[i]


# === CouplingMatrix ===
# Joint law of a pair (X, Y) with marginals mu (rows) and nu (columns).
class CouplingMatrix(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    joint: np.ndarray
    mu: ProbVector
    nu: ProbVector

    @field_serializer("joint")
    def _serialize_joint(self, j: np.ndarray) -> list[list[float]]:
        return j.tolist()

    @property
    def off_diagonal_mass(self) -> float:
        return float(self.joint.sum() - np.trace(self.joint))


# === TraceSpec ===
# The watched set S of a trace chain.
class TraceSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    subset: tuple[int, ...]
    complement_solver_tol: float = 1e-12

    @field_validator("subset", mode="before")
    @classmethod
    def _normalize_subset(cls, value) -> tuple[int, ...]:
        states = tuple(sorted({int(s) for s in value}))
        if not states:
            raise ValueError("trace subset must be non-empty")
        if states[0] < 0:
            raise ValueError("state indices must be non-negative")
        return states
