"""
One-step sampling interface shared by finite chains, Metropolis-Hastings,
Gibbs and the time-changed chains built on top of them.
"""

from __future__ import annotations

import itertools
from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterator, Optional

import numpy as np

from mixhit.applib.helpers import write_csv
from mixhit.applib.models.distributions import FiniteKernel


@dataclass(frozen=True)
class StateDescriptor:
    dimension: int
    n_states: Optional[int] = None  # set for finite state spaces {0..n-1}

    @property
    def finite(self) -> bool:
        return self.n_states is not None


class MarkovSampler(ABC):
    """
    A chain that can be replayed: the whole path is a deterministic function of
    the start state and the generator it is given.
    """

    descriptor: StateDescriptor

    @abstractmethod
    def iter_path(self, start: Any, rng: np.random.Generator) -> Iterator[Any]:
        """Yield X_0 = start, X_1, X_2, ... forever."""

    def path(self, start: Any, n_steps: int, rng: np.random.Generator) -> list:
        return list(itertools.islice(self.iter_path(start, rng), n_steps + 1))

    def step(self, state: Any, rng: np.random.Generator) -> Any:
        it = self.iter_path(state, rng)
        next(it)
        return next(it)


class KernelSampler(MarkovSampler):
    """A sampler defined by a single transition draw."""

    @abstractmethod
    def transition(self, state: Any, rng: np.random.Generator) -> Any:
        ...

    def iter_path(self, start: Any, rng: np.random.Generator) -> Iterator[Any]:
        x = start
        while True:
            yield x
            x = self.transition(x, rng)


class FiniteSampler(KernelSampler):
    """Inverse-CDF row sampling for a finite kernel on {0..n-1}."""

    def __init__(self, kernel: FiniteKernel):
        self.kernel = kernel
        self.descriptor = StateDescriptor(dimension=1, n_states=kernel.n)
        self._cumulative = np.cumsum(kernel.matrix, axis=1)
        self._cumulative[:, -1] = 1.0

    def transition(self, state: int, rng: np.random.Generator) -> int:
        u = rng.random()
        return int(min(np.searchsorted(self._cumulative[state], u, side="right"), self.kernel.n - 1))

    def advance(self, states: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """One step for a whole batch of independent chains."""
        u = rng.random(states.shape[0])
        nxt = (self._cumulative[states] <= u[:, None]).sum(axis=1)
        return np.minimum(nxt, self.kernel.n - 1)


def finite_sampler(kernel: FiniteKernel) -> FiniteSampler:
    return FiniteSampler(kernel)


def dump_trajectory(path: str | Path, states: list) -> Path:
    """CSV with columns t, x0, x1, ... (one row per time step)."""
    rows = [np.atleast_1d(np.asarray(s, dtype=float)) for s in states]
    width = rows[0].size if rows else 1
    columns = ["t"] + [f"x{i}" for i in range(width)]
    return write_csv(
        path,
        columns,
        ({"t": t, **{f"x{i}": float(v) for i, v in enumerate(r)}} for t, r in enumerate(rows)),
    )
