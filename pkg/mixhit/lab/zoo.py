"""
The chain catalog: small reversible kernels spanning periodic, fast-mixing
and slow-mixing behaviour, each built with its exact stationary distribution.
"""

from __future__ import annotations

import itertools
import logging
import re
from dataclasses import dataclass

import numpy as np
from pydantic import ValidationError
from scipy.stats import binom

from mixhit.applib.errors import ConfigError
from mixhit.applib.models.distributions import FiniteKernel, ProbVector
from mixhit.applib.models.lab import ZooSpec
from mixhit.applib.types import ZooKind
from mixhit.kernels.core import finite_kernel, is_aperiodic, prob_vector, stationary_distribution, uniform, with_stationary
from mixhit.sampling.mh import metropolize
from mixhit.sampling.rng import make_rng

logger = logging.getLogger(__name__)

_SPEC_PATTERN = re.compile(r"^\s*([a-z_]+)\s*(?:\((.*)\))?\s*$")


def parse_zoo_spec(text: str) -> ZooSpec:
    """'flip', 'cycle(8)', 'hypercube(3)', 'birth_death(1,2,1)', 'random_reversible(6,3)'."""
    match = _SPEC_PATTERN.match(text)
    if not match:
        raise ConfigError(f"cannot parse zoo spec {text!r}")
    name, raw = match.groups()
    try:
        kind = ZooKind(name)
    except ValueError:
        raise ConfigError(f"unknown zoo kind {name!r}; expected one of {[k.value for k in ZooKind]}") from None
    args = [a.strip() for a in raw.split(",")] if raw and raw.strip() else []

    try:
        match kind:
            case ZooKind.FLIP:
                spec = ZooSpec(kind=kind)
            case ZooKind.HYPERCUBE:
                spec = ZooSpec(kind=kind, d=int(args[0]))
            case ZooKind.BIRTH_DEATH:
                spec = ZooSpec(kind=kind, weights=tuple(float(a) for a in args))
            case ZooKind.RANDOM_REVERSIBLE:
                spec = ZooSpec(kind=kind, n=int(args[0]), seed=int(args[1]) if len(args) > 1 else 0)
            case _:
                spec = ZooSpec(kind=kind, n=int(args[0]))
    except (IndexError, ValueError, ValidationError) as e:
        raise ConfigError(f"bad parameters in zoo spec {text!r}: {e}") from e
    validate_zoo_spec(spec)
    return spec


def validate_zoo_spec(spec: ZooSpec) -> None:
    match spec.kind:
        case ZooKind.CYCLE if spec.n is None or spec.n < 3:
            raise ConfigError("cycle needs n >= 3")
        case ZooKind.HYPERCUBE if spec.d is None or spec.d < 1:
            raise ConfigError("hypercube needs d >= 1")
        case ZooKind.BIRTH_DEATH if not spec.weights or len(spec.weights) < 2 or min(spec.weights) <= 0:
            raise ConfigError("birth_death needs at least two positive weights")
        case ZooKind.EHRENFEST | ZooKind.LAZY_UNIFORM | ZooKind.RANDOM_REVERSIBLE if spec.n is None or spec.n < 2:
            raise ConfigError(f"{spec.kind.value} needs n >= 2")


def default_zoo() -> list[ZooSpec]:
    specs = ["flip", "lazy_uniform(4)"]
    specs += [f"cycle({n})" for n in range(5, 13)]
    specs += [f"hypercube({d})" for d in range(2, 5)]
    specs += ["ehrenfest(6)", "birth_death(1,2,1)", "birth_death(1,2,3,2,1)"]
    specs += [f"random_reversible(6,{seed})" for seed in range(1, 5)]
    return [parse_zoo_spec(s) for s in specs]


# === Builders ===

def _flip() -> FiniteKernel:
    return finite_kernel([[0.0, 1.0], [1.0, 0.0]], stationary=uniform(2))


def _lazy_uniform(n: int) -> FiniteKernel:
    return finite_kernel(0.5 * np.eye(n) + 0.5 / n, stationary=uniform(n))


def _cycle(n: int) -> FiniteKernel:
    m = np.zeros((n, n))
    for i in range(n):
        m[i, (i + 1) % n] += 0.5
        m[i, (i - 1) % n] += 0.5
    return finite_kernel(m, stationary=uniform(n))


def _hypercube(d: int) -> FiniteKernel:
    n = 2**d
    m = np.zeros((n, n))
    for x in range(n):
        for bit in range(d):
            m[x, x ^ (1 << bit)] = 1.0 / d
    labels = ["".join(b) for b in itertools.product("01", repeat=d)]
    return finite_kernel(m, labels, stationary=uniform(n))


def _ehrenfest(n: int) -> FiniteKernel:
    m = np.zeros((n + 1, n + 1))
    for k in range(n + 1):
        if k > 0:
            m[k, k - 1] = k / n
        if k < n:
            m[k, k + 1] = (n - k) / n
    pi = prob_vector(binom.pmf(np.arange(n + 1), n, 0.5))
    return finite_kernel(m, stationary=pi)


def _path_proposal(n: int) -> np.ndarray:
    q = np.zeros((n, n))
    for i in range(n):
        for j in (i - 1, i + 1):
            q[i, j if 0 <= j < n else i] += 0.5
    return q


def _birth_death(weights: tuple[float, ...]) -> FiniteKernel:
    return metropolize(weights, _path_proposal(len(weights)))


def _random_reversible(n: int, seed: int) -> FiniteKernel:
    rng = make_rng(seed)
    weights = rng.uniform(0.5, 2.0, size=n)
    adjacency = np.zeros((n, n), dtype=bool)
    order = rng.permutation(n)
    adjacency[order[:-1], order[1:]] = True  # a spanning path keeps the proposal connected
    adjacency |= np.triu(rng.random((n, n)) < 0.3, 1)
    adjacency |= adjacency.T
    np.fill_diagonal(adjacency, False)
    degree = adjacency.sum(axis=1).max()
    q = adjacency / degree
    np.fill_diagonal(q, 1.0 - q.sum(axis=1))
    return metropolize(weights, q)


def build_zoo_chain(spec: ZooSpec) -> tuple[FiniteKernel, ProbVector]:
    validate_zoo_spec(spec)
    match spec.kind:
        case ZooKind.FLIP:
            kernel = _flip()
        case ZooKind.LAZY_UNIFORM:
            kernel = _lazy_uniform(spec.n)
        case ZooKind.CYCLE:
            kernel = _cycle(spec.n)
        case ZooKind.HYPERCUBE:
            kernel = _hypercube(spec.d)
        case ZooKind.EHRENFEST:
            kernel = _ehrenfest(spec.n)
        case ZooKind.BIRTH_DEATH:
            kernel = _birth_death(spec.weights)
        case ZooKind.RANDOM_REVERSIBLE:
            kernel = _random_reversible(spec.n, spec.seed or 0)
    if kernel.cached_stationary is None:
        kernel = with_stationary(kernel)
    return kernel, stationary_distribution(kernel)


@dataclass(frozen=True)
class ZooChain:
    spec: ZooSpec
    kernel: FiniteKernel
    pi: ProbVector
    aperiodic: bool

    @property
    def chain_id(self) -> str:
        return self.spec.chain_id

    @property
    def n(self) -> int:
        return self.kernel.n


def build_zoo(specs: list[ZooSpec], max_states: int | None = None) -> list[ZooChain]:
    chains = []
    for spec in specs:
        kernel, pi = build_zoo_chain(spec)
        if max_states is not None and kernel.n > max_states:
            logger.warning("skipping %s: %d states exceed max_states=%d", spec.chain_id, kernel.n, max_states)
            continue
        chains.append(ZooChain(spec=spec, kernel=kernel, pi=pi, aperiodic=is_aperiodic(kernel)))
    return chains


# === Random fixtures for property checks ===

def random_stochastic(n: int, rng: np.random.Generator, sparsity: float = 0.0) -> FiniteKernel:
    """
    Dirichlet rows, optionally with entries zeroed. The diagonal and the cyclic
    successor i -> i+1 stay positive, so sparse kernels remain irreducible.
    """
    m = rng.dirichlet(np.ones(n), size=n)
    if sparsity > 0:
        idx = np.arange(n)
        m = m * (rng.random((n, n)) >= sparsity)
        m[idx, idx] += 0.05
        m[idx, (idx + 1) % n] += 0.05
        m = m / m.sum(axis=1, keepdims=True)
    return finite_kernel(m)


def random_subset(n: int, rng: np.random.Generator) -> tuple[int, ...]:
    size = int(rng.integers(1, n + 1))
    return tuple(sorted(rng.choice(n, size=size, replace=False).tolist()))
