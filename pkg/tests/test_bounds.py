"""Tests for the `bounds` and `stats` modules."""

from __future__ import annotations

import math

import pytest

from relay_rgg.bounds import (
    BernoulliSumSpec,
    chernoff_upper,
    chernoff_violations,
    circle_chain_failure_bound,
    degenerate_window,
    eup_failure_bound,
    exact_two_sided_tail,
    implied_constant,
    ratio_event_bound,
    two_point_event_bound,
    max_exponential_median,
    per_hop_weight_failure,
    ratio_radius_floor,
    tail_bound_calculators,
    two_point_specialized,
)
from relay_rgg.errors import InstanceTooLargeError, ParameterError
from relay_rgg.relay import DISK_SCALE
from relay_rgg.stats import describe, frequency, wilson_interval


def test_chernoff_bound_holds_on_grid() -> None:
    """Never see the exact tail exceed the bound outside degenerate windows."""
    report = chernoff_violations()
    assert len(report.cells) == 30 * 3 * 3
    assert report.violations == []
    assert report.degenerate
    for cell in report.degenerate:
        assert cell.exact == pytest.approx(1.0)


def test_degenerate_window() -> None:
    """Detect windows holding no integer."""
    assert degenerate_window(0.2, 0.1)
    assert not degenerate_window(15.0, 0.1)
    assert degenerate_window(1.5, 0.3)
    assert not degenerate_window(1.0, 0.5)


def test_exact_tail_of_two_fair_coins() -> None:
    """Sum the outcomes 0 and 2 of two fair coins."""
    assert exact_two_sided_tail(BernoulliSumSpec.identical(2, 0.5), 0.5) == pytest.approx(0.5)


def test_exact_tail_mixed_probabilities() -> None:
    """Convolve different success probabilities."""
    spec = BernoulliSumSpec((0.5, 1.0))
    assert spec.mu == pytest.approx(1.5)
    assert exact_two_sided_tail(spec, 0.3) == pytest.approx(1.0)


def test_exact_tail_term_limit() -> None:
    """Refuse more than thirty terms."""
    with pytest.raises(InstanceTooLargeError):
        exact_two_sided_tail(BernoulliSumSpec.identical(31, 0.5), 0.1)


@pytest.mark.parametrize("p_list", [(), (0.0,), (0.5, 1.5)])
def test_bernoulli_sum_rejects_bad_probabilities(p_list: tuple[float, ...]) -> None:
    """Refuse empty sums and probabilities outside (0, 1].

    Parameters:
        p_list: Success probabilities.
    """
    with pytest.raises(ParameterError):
        BernoulliSumSpec(p_list)


def test_chernoff_upper() -> None:
    """Evaluate the bound and check its deviation range."""
    assert chernoff_upper(4.0, 0.5) == pytest.approx(math.exp(-0.25))
    with pytest.raises(ParameterError):
        chernoff_upper(4.0, 0.6)
    with pytest.raises(ParameterError):
        chernoff_upper(0.0, 0.5)


def test_distance_bounds() -> None:
    """Evaluate the distance event bounds."""
    assert ratio_event_bound(100, 0.1, 1.0) == pytest.approx(math.exp(-1))
    bound = two_point_event_bound(10_000, 0.1, 0.1, 1.0)
    assert bound.value == pytest.approx(2 * math.exp(-100))
    assert bound.specialized_applies
    assert bound.specialized == pytest.approx(two_point_specialized(10_000, 1.0))
    assert not two_point_event_bound(10_000, 0.1, 0.5, 1.0).specialized_applies
    with pytest.raises(ParameterError):
        ratio_event_bound(100, -0.1, 1.0)


def test_tail_bound_calculators() -> None:
    """Evaluate the length and weight bounds together."""
    tails = tail_bound_calculators(100, 0.1, 2, 10)
    assert tails.ratio_length == pytest.approx(math.exp(-1))
    assert tails.two_point_length == pytest.approx(math.exp(-0.01))
    assert tails.weight == pytest.approx(1e-4)
    assert tails.delta_n == pytest.approx(20 * math.log(100))
    with pytest.raises(ParameterError):
        tail_bound_calculators(100, 0.1, 0, 10)


def test_circle_chain_failure_bound() -> None:
    """Evaluate the empty-disk union bound, capped at 1."""
    exponent = math.pi * 1e7 * 0.01 * 0.25 / (DISK_SCALE**2 * 4.5**2)
    assert circle_chain_failure_bound(1e7, 0.1, 4.0, 0.5) == pytest.approx(5.5 * math.exp(-exponent))
    assert circle_chain_failure_bound(10, 0.1, 4.0, 0.5) == 1.0


def test_ratio_radius_floor() -> None:
    """Return the smallest radius of the ratio regime."""
    assert ratio_radius_floor(100, 2.0) == pytest.approx(math.sqrt(2 * math.log(100) / 100))


def test_eup_failure_bound() -> None:
    """Count every edge of the complete combined graph."""
    bound = eup_failure_bound(10, 2, 3.0)
    assert bound.value == pytest.approx(65 / 1000)
    assert bound.simplified == pytest.approx(0.1)


@pytest.mark.parametrize("m", [1, 2, 5, 20])
def test_median_of_maximum(m: int) -> None:
    """Put half of the mass of the maximum below its median.

    Parameters:
        m: Number of exponentials.
    """
    assert per_hop_weight_failure(m, max_exponential_median(m)) == pytest.approx(0.5)


def test_per_hop_weight_failure() -> None:
    """Evaluate the distribution of the maximum of exponentials."""
    assert max_exponential_median(1) == pytest.approx(math.log(2))
    assert per_hop_weight_failure(3, math.log(2)) == pytest.approx(0.125)
    assert per_hop_weight_failure(3, 0.0) == 0.0
    with pytest.raises(ParameterError):
        per_hop_weight_failure(0, 1.0)


def test_implied_constant() -> None:
    """Invert an observed failure rate."""
    assert implied_constant(math.exp(-2), 4.0) == pytest.approx(0.5)
    assert implied_constant(0.0, 4.0) == math.inf
    assert implied_constant(1.0, 4.0) == 0.0


def test_wilson_interval() -> None:
    """Bracket the observed proportion."""
    low, high = wilson_interval(5, 10)
    assert low < 0.5 < high
    assert (low, high) == pytest.approx((0.2366, 0.7634), abs=1e-3)
    assert wilson_interval(0, 0) == (0.0, 1.0)
    assert wilson_interval(0, 20)[0] == 0.0
    assert wilson_interval(20, 20)[1] == 1.0


def test_describe() -> None:
    """Summarize three values and leave out non-finite ones."""
    stats = describe([1.0, 2.0, 6.0, math.inf])
    assert stats.count == 3
    assert stats.mean == pytest.approx(3.0)
    assert stats.variance == pytest.approx(7.0)
    assert stats.median == pytest.approx(2.0)
    assert (stats.min, stats.max) == (1.0, 6.0)


def test_describe_single_and_empty() -> None:
    """Give a single value no variance and an empty input NaN fields."""
    assert describe([4.0]).variance == 0.0
    assert math.isnan(describe([]).mean)


def test_frequency() -> None:
    """Count flags and compare intervals."""
    first = frequency([True, False, True, True])
    assert first.value == pytest.approx(0.75)
    assert first.overlaps(frequency([True, True, False]))
    assert not frequency([True] * 50).overlaps(frequency([False] * 50))
    assert math.isnan(frequency([]).value)
