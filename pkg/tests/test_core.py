import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mixhit.applib.errors import DimensionMismatch, InvalidDistribution, InvalidKernel, NonUniqueStationary
from mixhit.kernels.core import (
    check_reversible,
    contraction_profile,
    dump_kernel,
    finite_kernel,
    is_aperiodic,
    iterate_distribution,
    kernel_from_text,
    load_kernel,
    point_mass,
    prob_vector,
    reversibilize,
    stationarity_defect,
    stationary_distribution,
    tv_distance,
    uniform,
)
from tests.strategies import prob_vector_pairs, prob_vector_triples, random_kernels


@pytest.mark.parametrize(
    "mu, nu, expected",
    [
        ([1.0, 0.0], [0.0, 1.0], 1.0),
        ([0.3, 0.7], [0.3, 0.7], 0.0),
        ([0.5, 0.5], [0.75, 0.25], 0.25),
    ],
)
def test_tv_distance(mu, nu, expected):
    assert tv_distance(prob_vector(mu), prob_vector(nu)) == pytest.approx(expected)


def test_tv_distance_rejects_mismatched_sizes():
    with pytest.raises(DimensionMismatch):
        tv_distance(uniform(2), uniform(3))


def test_prob_vector_validation():
    with pytest.raises(InvalidDistribution):
        prob_vector([0.5, 0.6])
    with pytest.raises(InvalidDistribution):
        prob_vector([1.5, -0.5])
    # float noise is clamped and renormalized
    v = prob_vector([1.0 + 1e-12, -1e-15])
    assert v.weights[1] == 0.0
    assert v.weights.sum() == pytest.approx(1.0, abs=1e-15)


def test_prob_vector_is_read_only():
    v = uniform(3)
    with pytest.raises(ValueError):
        v.weights[0] = 1.0


def test_finite_kernel_validation():
    with pytest.raises(InvalidKernel):
        finite_kernel([[0.5, 0.6], [0.5, 0.5]])
    with pytest.raises(InvalidKernel):
        finite_kernel([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    with pytest.raises(InvalidKernel):
        finite_kernel([[np.nan, 1.0], [0.5, 0.5]])
    k = finite_kernel([[0.5, 0.5 + 1e-11], [1.0, 0.0]])
    np.testing.assert_allclose(k.matrix.sum(axis=1), 1.0, atol=1e-15)
    assert k.labels == ("0", "1")


def test_stationary_distribution(flip, birth_death):
    np.testing.assert_allclose(stationary_distribution(flip).weights, [0.5, 0.5], atol=1e-12)
    np.testing.assert_allclose(stationary_distribution(birth_death).weights, [0.25, 0.5, 0.25], atol=1e-12)


def test_stationary_distribution_reducible():
    with pytest.raises(NonUniqueStationary):
        stationary_distribution(finite_kernel(np.eye(2)))


@settings(max_examples=40, deadline=None)
@given(random_kernels)
def test_stationary_distribution_is_fixed_point(kernel):
    pi = stationary_distribution(kernel)
    assert stationarity_defect(kernel, pi) < 1e-10
    assert np.all(pi.weights >= 0)


def test_check_reversible(rotation, birth_death):
    symmetric = finite_kernel([[0.2, 0.8], [0.8, 0.2]])
    assert check_reversible(symmetric, uniform(2))
    assert not check_reversible(rotation, uniform(3))
    assert check_reversible(birth_death, prob_vector([0.25, 0.5, 0.25]))


def test_reversibilize(rotation, birth_death):
    pi = prob_vector([0.25, 0.5, 0.25])
    np.testing.assert_allclose(reversibilize(birth_death, pi).matrix, birth_death.matrix, atol=1e-15)
    sym = reversibilize(rotation, uniform(3))
    np.testing.assert_allclose(sym.matrix, 0.5 * (rotation.matrix + rotation.matrix.T))
    assert check_reversible(sym, uniform(3))


def test_iterate_distribution(flip, lazy_flip):
    np.testing.assert_array_equal(iterate_distribution(flip, point_mass(2, 0), 2).weights, [1.0, 0.0])
    np.testing.assert_array_equal(iterate_distribution(flip, point_mass(2, 0), 1).weights, [0.0, 1.0])
    np.testing.assert_allclose(iterate_distribution(lazy_flip, point_mass(2, 0), 1).weights, [0.5, 0.5])
    with pytest.raises(DimensionMismatch):
        iterate_distribution(flip, uniform(3), 1)


def test_contraction_profile_flip(flip, half):
    profile = contraction_profile(flip, half, 5)
    assert profile.d_values == (0.5,) * 6
    assert profile.dbar_values == (1.0,) * 6


@settings(max_examples=30, deadline=None)
@given(random_kernels)
def test_contraction_profile_orderings(kernel):
    pi = stationary_distribution(kernel)
    profile = contraction_profile(kernel, pi, 12)
    d = np.array(profile.d_values)
    dbar = np.array(profile.dbar_values)
    assert np.all(d <= dbar + 1e-12)
    assert np.all(dbar <= 2 * d + 1e-12)
    assert np.all(np.diff(d) <= 1e-12)
    assert np.all(np.diff(dbar) <= 1e-12)


def test_is_aperiodic(flip, lazy_flip, rotation):
    assert not is_aperiodic(flip)
    assert is_aperiodic(lazy_flip)
    assert not is_aperiodic(rotation)
    assert is_aperiodic(finite_kernel([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.5, 0.5, 0.0]]))


@pytest.mark.parametrize("suffix", [".json", ".txt"])
def test_kernel_file_formats(tmp_path, birth_death, suffix):
    path = dump_kernel(birth_death, tmp_path / f"kernel{suffix}")
    np.testing.assert_array_equal(load_kernel(path).matrix, birth_death.matrix)


def test_kernel_from_text_errors():
    with pytest.raises(InvalidKernel):
        kernel_from_text("")
    with pytest.raises(InvalidKernel):
        kernel_from_text("2\n1 0 0")
    with pytest.raises(InvalidKernel):
        kernel_from_text("2\n1 0 zero 1")


# === Properties on random inputs ===

@given(prob_vector_triples)
def test_tv_distance_is_a_metric(triple):
    mu, nu, rho = triple
    d = tv_distance(mu, nu)
    assert 0.0 <= d <= 1.0 + 1e-12
    assert d == pytest.approx(tv_distance(nu, mu), abs=1e-15)
    assert d <= tv_distance(mu, rho) + tv_distance(rho, nu) + 1e-12
    assert tv_distance(mu, mu) == 0.0


@given(prob_vector_pairs)
def test_tv_distance_zero_only_for_equal_laws(pair):
    mu, nu = pair
    if tv_distance(mu, nu) == 0.0:
        np.testing.assert_allclose(mu.weights, nu.weights, rtol=0, atol=1e-15)
    else:
        assert not np.array_equal(mu.weights, nu.weights)


@settings(max_examples=30, deadline=None)
@given(random_kernels, st.integers(0, 20))
def test_stationary_law_is_invariant_under_iteration(kernel, t):
    pi = stationary_distribution(kernel)
    np.testing.assert_allclose(iterate_distribution(kernel, pi, t).weights, pi.weights, atol=1e-9)


@settings(max_examples=30, deadline=None)
@given(random_kernels)
def test_reversibilize_keeps_pi_and_is_reversible(kernel):
    pi = stationary_distribution(kernel)
    sym = reversibilize(kernel, pi)
    assert stationarity_defect(sym, pi) < 1e-10
    assert check_reversible(sym, pi, 1e-10)
