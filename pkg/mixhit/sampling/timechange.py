"""
Path-level time changes: the geometric laziness clock, k-skeletons, traces
on a watched set and the composite G chain.
"""

from __future__ import annotations

import itertools
from typing import Any, Callable, Iterator, Optional

import numpy as np

from mixhit.applib.config import config
from mixhit.applib.errors import TraceStepCapExceeded
from mixhit.applib.types import TimeChangeMode
from mixhit.sampling.base import MarkovSampler


class TimeChangeStream:
    """
    i.i.d. holding times zeta_i with P(zeta = j) = 2^-j on {1, 2, ...}, and the
    clock L(t) = max{i : zeta_1 + ... + zeta_i <= t}.
    """

    def __init__(self, rng: np.random.Generator):
        self.rng = rng
        self._renewals: list[int] = []  # partial sums zeta_1 + ... + zeta_i

    def zeta(self) -> int:
        z = int(self.rng.geometric(0.5))
        self._renewals.append((self._renewals[-1] if self._renewals else 0) + z)
        return z

    def clock(self, t: int) -> int:
        while not self._renewals or self._renewals[-1] <= t:
            self.zeta()
        return int(np.searchsorted(self._renewals, t, side="right"))


def lazy_clock(rng: np.random.Generator, size: int, k: int) -> np.ndarray:
    """L(1..k) for `size` independent clocks, shape (size, k)."""
    # k holding times always reach past time k since each is >= 1
    renewals = np.cumsum(rng.geometric(0.5, size=(size, k)), axis=1)
    counts = np.zeros((size, k + 1), dtype=np.int64)
    rows, cols = np.nonzero(renewals <= k)
    np.add.at(counts, (rows, renewals[rows, cols]), 1)
    return np.cumsum(counts, axis=1)[:, 1:]


class LazySampler(MarkovSampler):
    """X_{L(t)}: each base state is held for a geometric number of steps."""

    def __init__(self, base: MarkovSampler):
        self.base = base
        self.descriptor = base.descriptor

    def iter_path(self, start: Any, rng: np.random.Generator) -> Iterator[Any]:
        stream = TimeChangeStream(rng)
        base_path = self.base.iter_path(start, rng)
        current = next(base_path)
        while True:
            for _ in range(stream.zeta()):
                yield current
            current = next(base_path)


class SkeletonSampler(MarkovSampler):
    """X_0, X_k, X_2k, ..."""

    def __init__(self, base: MarkovSampler, k: int):
        if k < 1:
            raise ValueError(f"skeleton step must be >= 1, got {k}")
        self.base = base
        self.k = k
        self.descriptor = base.descriptor

    def iter_path(self, start: Any, rng: np.random.Generator) -> Iterator[Any]:
        return itertools.islice(self.base.iter_path(start, rng), 0, None, self.k)


class TraceSampler(MarkovSampler):
    """The base path watched only at its visits to a set; a start outside the set is moved to its first visit."""

    def __init__(self, base: MarkovSampler, indicator: Callable[[Any], bool], step_cap: Optional[int] = None):
        self.base = base
        self.indicator = indicator
        self.step_cap = config.TRACE_STEP_CAP if step_cap is None else step_cap
        self.descriptor = base.descriptor

    def iter_path(self, start: Any, rng: np.random.Generator) -> Iterator[Any]:
        since = 0
        for x in self.base.iter_path(start, rng):
            if self.indicator(x):
                since = 0
                yield x
            else:
                since += 1
                if since > self.step_cap:
                    raise TraceStepCapExceeded(f"no visit to the watched set within {self.step_cap} steps")


def apply_time_change(
    sampler: MarkovSampler,
    mode: TimeChangeMode | str,
    k: int = 1,
    indicator: Optional[Callable[[Any], bool]] = None,
    step_cap: Optional[int] = None,
) -> MarkovSampler:
    mode = TimeChangeMode(mode)
    match mode:
        case TimeChangeMode.LAZY:
            return LazySampler(sampler)
        case TimeChangeMode.SKELETON:
            return SkeletonSampler(sampler, k)
        case TimeChangeMode.TRACE:
            if indicator is None:
                raise ValueError("trace mode needs a set indicator")
            return TraceSampler(sampler, indicator, step_cap)
        case TimeChangeMode.G:
            # lazy-repeat, take the k-skeleton, lazy-repeat again
            return LazySampler(SkeletonSampler(LazySampler(sampler), k))
