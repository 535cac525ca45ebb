"""Hypothesis strategies for random finite kernels and distributions."""

import numpy as np
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from mixhit.kernels.core import prob_vector
from mixhit.lab.zoo import random_stochastic
from mixhit.sampling.rng import make_rng

seeds = st.integers(min_value=0, max_value=2**32 - 1)

# Kernels are drawn from a seeded generator so failures replay
random_kernels = st.builds(lambda n, seed: random_stochastic(n, make_rng(seed)), st.integers(2, 8), seeds)

sparse_kernels = st.builds(lambda n, seed: random_stochastic(n, make_rng(seed), sparsity=0.4), st.integers(2, 8), seeds)


def prob_vectors(n: int):
    return (
        arrays(np.float64, n, elements=st.floats(0.0, 1.0))
        .filter(lambda w: w.sum() > 1e-3)
        .map(lambda w: prob_vector(w / w.sum()))
    )


# Two or three distributions on one state space
prob_vector_pairs = st.integers(1, 8).flatmap(lambda n: st.tuples(prob_vectors(n), prob_vectors(n)))
prob_vector_triples = st.integers(1, 8).flatmap(lambda n: st.tuples(prob_vectors(n), prob_vectors(n), prob_vectors(n)))

positive_weights = st.integers(2, 8).flatmap(lambda n: arrays(np.float64, n, elements=st.floats(0.01, 10.0)))


def subset_of(n: int, seed: int) -> tuple[int, ...]:
    rng = np.random.default_rng(seed)
    size = int(rng.integers(1, n + 1))
    return tuple(sorted(rng.choice(n, size=size, replace=False).tolist()))
