import numpy as np
import pytest
from scipy.stats import norm

from mixhit.applib.errors import RejectionCapExceeded
from mixhit.applib.types import AsfFlavor
from mixhit.kernels.transforms import lazy
from mixhit.sampling.asf import (
    ConditionalStepSampler,
    SkeletonStepSampler,
    asf_decompose,
    draw_skeleton_step,
    index_windows,
    reversal,
    reversal_symmetry_test,
)
from mixhit.sampling.gibbs import bivariate_gaussian, gaussian_conditional, make_gibbs
from mixhit.sampling.mh import finite_proposal, independence_proposal, make_mh, metropolize
from mixhit.sampling.rng import make_rng


def standard_normal(x) -> float:
    return float(norm.logpdf(np.asarray(x)).sum())


@pytest.fixture
def exact_mh_sampler():
    proposal = independence_proposal(lambda rng: rng.standard_normal(1), standard_normal)
    return make_mh(standard_normal, proposal)[1]


# === Gibbs ===

def test_gibbs_one_dimension_forgets_start():
    _, sampler = make_gibbs(1, gaussian_conditional([0.0], [[1.0]]))
    assert np.array_equal(sampler.step(np.array([100.0]), make_rng(1)), sampler.step(np.array([-100.0]), make_rng(1)))


def test_gibbs_independent_coordinates():
    conditional = gaussian_conditional(*bivariate_gaussian(0.0))
    assert conditional(np.array([0.0, 5.0]), 0, 0.3) == conditional(np.array([0.0, -5.0]), 0, 0.3)


def test_gibbs_conditional_mean():
    conditional = gaussian_conditional(*bivariate_gaussian(0.5))
    assert conditional(np.array([0.0, 1.0]), 0, 0.5) == pytest.approx(0.5)
    assert conditional(np.array([2.0, 0.0]), 1, 0.5) == pytest.approx(1.0)


def test_gibbs_sampler_targets_the_joint_law():
    _, sampler = make_gibbs(2, gaussian_conditional(*bivariate_gaussian(0.5)))
    path = np.array(sampler.path(np.zeros(2), 20_000, make_rng(8)))[1000:]
    assert np.abs(path.mean(axis=0)).max() < 0.1
    assert np.corrcoef(path.T)[0, 1] == pytest.approx(0.5, abs=0.1)


def test_make_gibbs_rejects_bad_arguments():
    with pytest.raises(ValueError):
        make_gibbs(0, gaussian_conditional([0.0], [[1.0]]))
    with pytest.raises(ValueError):
        bivariate_gaussian(1.0)


# === Decompositions ===

def test_gibbs_decomposition_single_coordinate_never_bad():
    _, sampler = make_gibbs(1, gaussian_conditional([0.0], [[1.0]]))
    dec = asf_decompose(sampler, AsfFlavor.GIBBS, 1, 500, make_rng(9), start=np.zeros(1))
    assert dec.p == 0.0
    assert not dec.event_indicator.any()
    assert dec.C_target == pytest.approx(1.0 / dec.p_estimate.upper)


def test_gibbs_decomposition_two_coordinates():
    # Window of L(k) + 1 uniform indices misses a coordinate with probability E[2^-L(k)] = (3/4)^k
    _, sampler = make_gibbs(2, gaussian_conditional(*bivariate_gaussian(0.5)))
    dec = asf_decompose(sampler, "gibbs", 4, 4000, make_rng(10), start=np.zeros(2))
    assert dec.p_estimate.covers(0.75**4, widths=1.5)
    assert dec.within_bound


def test_mh_decomposition_without_rejections(exact_mh_sampler):
    # Only empty lazy windows stay put: P(L(k) = 0) = 2^-k
    dec = asf_decompose(exact_mh_sampler, AsfFlavor.MH, 3, 4000, make_rng(11), start=np.zeros(1), gamma=1.0)
    assert dec.p_estimate.covers(0.125, widths=1.5)
    assert dec.bound == pytest.approx(0.125)
    assert dec.within_bound


def test_conditional_samplers_split_on_the_event(exact_mh_sampler):
    dec = asf_decompose(exact_mh_sampler, AsfFlavor.MH, 2, 1000, make_rng(12), start=np.zeros(1))
    assert dec.bound is None and dec.within_bound is None
    x = np.full(1, 0.7)
    rng = make_rng(13)
    for _ in range(20):
        assert np.array_equal(dec.g2_sampler.step(x, rng), x)
        assert not np.array_equal(dec.g1_sampler.step(x, rng), x)


def test_conditional_sampler_rejection_cap():
    _, sampler = make_gibbs(1, gaussian_conditional([0.0], [[1.0]]))
    bad_only = ConditionalStepSampler(sampler, AsfFlavor.GIBBS, 2, bad=True, max_attempts=5)
    with pytest.raises(RejectionCapExceeded):
        bad_only.step(np.zeros(1), make_rng(14))


def test_asf_decompose_argument_checks(exact_mh_sampler):
    with pytest.raises(TypeError):
        asf_decompose(exact_mh_sampler, AsfFlavor.GIBBS, 2, 10, make_rng(15), start=np.zeros(1))
    with pytest.raises(ValueError):
        asf_decompose(exact_mh_sampler, AsfFlavor.MH, 0, 10, make_rng(15), start=np.zeros(1))


def test_draw_skeleton_step_records_the_index_window():
    _, sampler = make_gibbs(3, gaussian_conditional(np.zeros(3), np.eye(3)))
    rng = make_rng(16)
    for _ in range(50):
        draw = draw_skeleton_step(sampler, AsfFlavor.GIBBS, 5, np.zeros(3), rng)
        assert 1 <= len(draw.indices) <= 6
        assert draw.bad == (len(set(draw.indices)) < 3)


# === Index reversal ===

def test_reversal():
    assert reversal((1, 2, 3), 2) == (3, 2, 1)
    assert reversal((1, 2, 3), 1) == (2, 1)
    with pytest.raises(ValueError):
        reversal((1, 2), 2)


def test_index_windows_tags():
    for window, bad in index_windows(3, 4, 500, make_rng(17)):
        assert 1 <= len(window) <= 5
        assert bad == (len(set(window)) < 3)


def test_good_windows_are_reversal_symmetric():
    windows = index_windows(2, 3, 20_000, make_rng(18))
    assert reversal_symmetry_test(w for w, bad in windows if not bad) > 0.001


def test_reversal_symmetry_test_detects_asymmetry():
    assert reversal_symmetry_test([(0, 1)] * 100 + [(1, 0)] * 10) < 1e-6
    assert reversal_symmetry_test([(0, 1, 0), (1,)]) == 1.0


def test_skeleton_step_law_is_the_mixture_of_its_conditionals():
    # From the heaviest of three states the MH chain holds with probability 1/2,
    # so the window never moves with probability (3/4)^k
    weights = np.array([1.0, 2.0, 3.0])
    q = (np.ones((3, 3)) - np.eye(3)) / 2
    _, sampler = make_mh(lambda x: float(np.log(weights[x])), finite_proposal(q), n_states=3)
    k, x, n = 2, 2, 20_000
    p = 0.75**k
    exact = np.linalg.matrix_power(lazy(metropolize(weights, q)).matrix, k)[x]

    dec = asf_decompose(sampler, AsfFlavor.MH, k, n, make_rng(17), start=x)
    assert dec.p_estimate.covers(p, widths=1.5)

    rng = make_rng(18)

    def law(chain):
        return np.bincount([chain.step(x, rng) for _ in range(n)], minlength=3) / n

    g1, g2 = law(dec.g1_sampler), law(dec.g2_sampler)
    np.testing.assert_array_equal(g2, [0.0, 0.0, 1.0])
    np.testing.assert_allclose((1 - p) * g1 + p * g2, exact, atol=0.02)
    np.testing.assert_allclose(law(SkeletonStepSampler(sampler, AsfFlavor.MH, k)), exact, atol=0.02)
