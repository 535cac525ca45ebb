import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mixhit.applib.types import ProbeFlavor
from mixhit.estimators import (
    FamilyMember,
    HittingStats,
    bernoulli_estimate,
    coupon_and_p_probe,
    dkw_halfwidth,
    empirical_tv_vs_exact,
    hoeffding_halfwidth,
    lazy_gibbs_bounds,
    mc_expected_hitting,
    mc_large_hitting,
    mh_bound,
    plain_coupon_bound,
    wilson_interval,
)
from mixhit.kernels.core import point_mass, uniform
from mixhit.kernels.times import hitting_moments
from mixhit.lab.zoo import build_zoo_chain, parse_zoo_spec
from mixhit.sampling.base import finite_sampler
from mixhit.sampling.rng import make_rng


# === Intervals ===

def test_halfwidths_shrink_with_samples():
    assert hoeffding_halfwidth(1000, 0.01) < hoeffding_halfwidth(100, 0.01)
    assert dkw_halfwidth(10_000, 0.01) == pytest.approx(math.sqrt(math.log(200) / 20_000))


@pytest.mark.parametrize("successes, n", [(0, 50), (50, 50), (13, 50), (1, 1000)])
def test_wilson_interval_contains_frequency(successes, n):
    lo, hi = wilson_interval(successes, n)
    assert 0.0 <= lo <= successes / n <= hi <= 1.0


def test_bernoulli_estimate():
    est = bernoulli_estimate(0, 100)
    assert est.point == 0.0 and est.halfwidth > 0
    assert bernoulli_estimate(30, 100).covers(0.3)


# === Hitting ===

@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(0, 1000), min_size=1, max_size=40), st.integers(0, 40))
def test_hitting_stats_merge_in_any_order(times, cut):
    cut = min(cut, len(times))
    left, right = HittingStats.from_times(times[:cut]), HittingStats.from_times(times[cut:], censored=2)
    assert left + right == right + left
    merged = left + right
    whole = HittingStats.from_times(times, censored=2)
    assert merged.count == whole.count
    assert merged.total == whole.total
    assert merged.total_sq == whole.total_sq
    assert merged.censored == 2


def test_mc_expected_hitting_deterministic(flip, rng):
    [est] = mc_expected_hitting(finite_sampler(flip), lambda x: x == 1, [0], 200, 10, rng)
    assert est.point == 1.0
    assert est.halfwidth == 0.0
    assert not est.is_lower_bound


def test_mc_expected_hitting_start_inside_target(flip, rng):
    [est] = mc_expected_hitting(finite_sampler(flip), lambda x: x == 0, [0], 100, 10, rng)
    assert est.point == 0.0


def test_mc_expected_hitting_lazy_flip(lazy_flip):
    exact = hitting_moments(lazy_flip, [0]).expected[1]
    [est] = mc_expected_hitting(finite_sampler(lazy_flip), lambda x: x == 0, [1], 10_000, 200, make_rng(21))
    assert exact == pytest.approx(2.0)
    assert est.covers(exact, widths=3.0)


def test_mc_expected_hitting_censoring(rng):
    kernel, _ = build_zoo_chain(parse_zoo_spec("cycle(9)"))
    [est] = mc_expected_hitting(finite_sampler(kernel), lambda x: x == 4, [0], 100, 3, rng)
    assert est.is_lower_bound
    assert est.point == 3.0


def test_mc_expected_hitting_needs_enough_runs(flip, rng):
    with pytest.raises(ValueError):
        mc_expected_hitting(finite_sampler(flip), lambda x: x == 1, [0], 10, 10, rng)


def test_mc_large_hitting_whole_space(lazy_flip, rng):
    family = [FamilyMember(indicator=lambda x: True, mass=1.0, name="everything")]
    est = mc_large_hitting(finite_sampler(lazy_flip), family, 0.5, [0, 1], 200, rng)
    assert est.time == 0
    assert est.worst_lower_bound > 0.9


def test_mc_large_hitting_singletons(lazy_flip, rng):
    family = [FamilyMember(indicator=lambda x, s=s: x == s, mass=0.5) for s in (0, 1)]
    est = mc_large_hitting(finite_sampler(lazy_flip), family, 0.4, [0, 1], 2000, rng)
    # the exact value is 4; the Wilson lower bound can only delay it
    assert est.time is not None and 4 <= est.time <= 6


def test_mc_large_hitting_needs_a_feasible_member(lazy_flip, rng):
    family = [FamilyMember(indicator=lambda x: x == 0, mass=0.5)]
    with pytest.raises(ValueError):
        mc_large_hitting(finite_sampler(lazy_flip), family, 0.75, [0], 200, rng)


@pytest.mark.parametrize("n", [10, 50])
def test_mc_large_hitting_rejects_too_few_runs(lazy_flip, rng, n):
    # 50 / (50 + z^2) ~ 0.883 at 99%: even a certain hit cannot clear 0.9
    assert wilson_interval(n, n)[0] <= 0.9
    family = [FamilyMember(indicator=lambda x: True, mass=1.0)]
    with pytest.raises(ValueError, match="runs"):
        mc_large_hitting(finite_sampler(lazy_flip), family, 0.5, [0, 1], n, rng)


def test_mc_large_hitting_smallest_sufficient_run_count(lazy_flip, rng):
    family = [FamilyMember(indicator=lambda x: True, mass=1.0)]
    assert wilson_interval(60, 60)[0] > 0.9
    assert mc_large_hitting(finite_sampler(lazy_flip), family, 0.5, [0, 1], 60, rng).time == 0


# === One-step total variation ===

def test_empirical_tv_exact_sampler_within_band(lazy_flip):
    est = empirical_tv_vs_exact(finite_sampler(lazy_flip), 0, uniform(2), 100_000, make_rng(22))
    assert est.point <= est.halfwidth


def test_empirical_tv_wrong_reference_is_detected(lazy_flip):
    est = empirical_tv_vs_exact(finite_sampler(lazy_flip), 0, point_mass(2, 0), 20_000, make_rng(23))
    assert est.point == pytest.approx(0.5, abs=0.02)
    assert est.point > est.halfwidth


# === Coupon-collector and lazy probes ===

def test_bounds():
    assert plain_coupon_bound(1, 5) == 0.0
    assert plain_coupon_bound(2, 1) == 1.0
    intermediate, bound = lazy_gibbs_bounds(3, 36)
    assert bound == pytest.approx(6 * math.exp(-3))
    assert intermediate == pytest.approx(3 * (2 / 3) ** 9 + math.exp(-324))
    assert mh_bound(1.0, 4) == 0.0625


@pytest.mark.parametrize("d, t", [(2, 3), (4, 10), (6, 20)])
def test_plain_coupon_bound_is_a_union_bound(d, t, rng):
    # inclusion-exclusion over the set of missed coupons
    exact = sum((-1) ** (j + 1) * math.comb(d, j) * (1 - j / d) ** t for j in range(1, d + 1))
    assert exact <= plain_coupon_bound(d, t)
    assert plain_coupon_bound(d, t) - exact <= math.comb(d, 2) * (1 - 2 / d) ** t + 1e-15
    result = coupon_and_p_probe(d, t, 20_000, ProbeFlavor.PLAIN, rng)
    assert result.estimate.covers(exact, widths=1.5)
    assert result.passed


def test_plain_probe_two_coupons_one_draw(rng):
    result = coupon_and_p_probe(2, 1, 1000, ProbeFlavor.PLAIN, rng)
    assert result.estimate.point == 1.0
    assert result.passed


@pytest.mark.parametrize("k", [1, 5])
def test_single_coordinate_is_always_covered(k, rng):
    result = coupon_and_p_probe(1, k, 1000, "lazy_gibbs", rng)
    assert result.estimate.point == 0.0
    assert result.bound > 0
    assert result.passed


def test_lazy_gibbs_probe_three_coordinates(rng):
    result = coupon_and_p_probe(3, 36, 20_000, ProbeFlavor.LAZY_GIBBS, rng)
    assert result.estimate.point <= 6 * math.exp(-3) + 3 * result.estimate.halfwidth
    assert result.intermediate_bound is not None
    assert result.passed


def test_lazy_gibbs_probe_two_coordinates_exact(rng):
    result = coupon_and_p_probe(2, 4, 50_000, ProbeFlavor.LAZY_GIBBS, rng)
    assert result.estimate.covers(0.75**4, widths=2.0)


def test_mh_probe_never_rejecting(rng):
    # With gamma = 1 the chain stays put only through an empty lazy window
    result = coupon_and_p_probe(1, 3, 50_000, ProbeFlavor.MH, rng, gamma=1.0)
    assert result.estimate.covers(0.125, widths=2.0)
    assert result.bound == 0.125
    assert result.passed


def test_mh_probe_finite_kernel(rng):
    kernel, _ = build_zoo_chain(parse_zoo_spec("birth_death(1,2,3,2,1)"))
    rates = 1.0 - np.diag(kernel.matrix)
    result = coupon_and_p_probe(kernel.n, 4, 50_000, ProbeFlavor.MH, rng, kernel=kernel)
    assert result.gamma == pytest.approx(rates.min())
    # Started at the stickiest state the chain stays put with probability E[(1 - gamma)^L(4)]
    assert result.estimate.covers((1.0 - rates.min() / 2) ** 4, widths=2.0)
    assert result.passed


def test_probe_argument_checks(rng):
    with pytest.raises(ValueError):
        coupon_and_p_probe(2, 3, 10, ProbeFlavor.PLAIN, rng)
    with pytest.raises(ValueError):
        coupon_and_p_probe(2, 3, 1000, ProbeFlavor.MH, rng)
    with pytest.raises(ValueError):
        coupon_and_p_probe(0, 3, 1000, ProbeFlavor.PLAIN, rng)
