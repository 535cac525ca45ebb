"""Random-scan Gibbs samplers in forward-mapping form."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np
from scipy import linalg
from scipy.stats import norm

from mixhit.sampling.base import KernelSampler, StateDescriptor

InverseCdf = Callable[[np.ndarray, int, float], float]

# Smallest uniform draw, so inverse CDFs never see 0
_U_FLOOR = np.nextafter(0.0, 1.0)


@dataclass(frozen=True)
class GibbsKernel:
    dimension: int
    conditional_inverse_cdf: InverseCdf  # (x, i, u) -> F_{x,i}^{-1}(u)

    def forward(self, x: np.ndarray, i: int, u: float) -> np.ndarray:
        """Replace coordinate i of x by a draw from its conditional law."""
        y = np.array(x, dtype=float, copy=True)
        y[i] = self.conditional_inverse_cdf(y, i, u)
        return y


class GibbsSampler(KernelSampler):
    def __init__(self, kernel: GibbsKernel):
        self.kernel = kernel
        self.descriptor = StateDescriptor(dimension=kernel.dimension)

    def draw_update(self, rng: np.random.Generator) -> tuple[int, float]:
        return int(rng.integers(self.kernel.dimension)), float(rng.uniform(_U_FLOOR, 1.0))

    def transition(self, state, rng: np.random.Generator) -> np.ndarray:
        i, u = self.draw_update(rng)
        return self.kernel.forward(state, i, u)

    def iter_updates(self, start, rng: np.random.Generator) -> Iterator[tuple[np.ndarray, int]]:
        """Yield (X_t, i_t): the state and the coordinate the next update touches."""
        x = np.asarray(start, dtype=float)
        while True:
            i, u = self.draw_update(rng)
            yield x, i
            x = self.kernel.forward(x, i, u)


def make_gibbs(dimension: int, conditional_inverse_cdf: InverseCdf) -> tuple[GibbsKernel, GibbsSampler]:
    if dimension < 1:
        raise ValueError("dimension must be >= 1")
    kernel = GibbsKernel(dimension=dimension, conditional_inverse_cdf=conditional_inverse_cdf)
    return kernel, GibbsSampler(kernel)


def gaussian_conditional(mean, cov) -> InverseCdf:
    """
    Conditional inverse CDFs of N(mean, cov) in precision form:
    x_i | x_-i ~ N(mean_i - sum_{j != i} Q_ij (x_j - mean_j) / Q_ii, 1 / Q_ii).
    """
    mean = np.asarray(mean, dtype=float)
    precision = linalg.inv(np.asarray(cov, dtype=float))
    diag = np.diag(precision).copy()

    def inverse_cdf(x: np.ndarray, i: int, u: float) -> float:
        centered = np.asarray(x, dtype=float) - mean
        shift = precision[i] @ centered - diag[i] * centered[i]
        return float(mean[i] - shift / diag[i] + norm.ppf(u) / np.sqrt(diag[i]))

    return inverse_cdf


def bivariate_gaussian(rho: float) -> tuple[np.ndarray, np.ndarray]:
    if not -1.0 < rho < 1.0:
        raise ValueError("correlation must lie in (-1, 1)")
    return np.zeros(2), np.array([[1.0, rho], [rho, 1.0]])
