import pytest
from hypothesis import given
from hypothesis import strategies as st

from relu_death.errors import RejectedInputError
from relu_death.montecarlo.confidence import Estimate, wilson_interval


def test_half_successes():
    low, high = wilson_interval(512, 1024, 0.95)
    assert low == pytest.approx(0.4694, abs=5e-4)
    assert high == pytest.approx(0.5306, abs=5e-4)


def test_boundaries_are_exact():
    assert wilson_interval(0, 100)[0] == 0.0
    assert wilson_interval(100, 100)[1] == 1.0


def test_single_trial_gives_a_wide_interval():
    for successes in (0, 1):
        estimate = Estimate.from_counts(successes, 1)
        assert estimate.p_hat in (0.0, 1.0)
        assert estimate.ci_high - estimate.ci_low > 0.7


@given(trials=st.integers(1, 10**6), data=st.data())
def test_interval_contains_the_point_estimate(trials, data):
    successes = data.draw(st.integers(0, trials))
    level = data.draw(st.sampled_from([0.8, 0.95, 0.99]))
    estimate = Estimate.from_counts(successes, trials, level)
    assert 0.0 <= estimate.ci_low <= estimate.p_hat <= estimate.ci_high <= 1.0


def test_higher_level_widens_the_interval():
    estimate = Estimate.from_counts(30, 200, 0.95)
    wider = estimate.at_level(0.99)
    assert wider.ci_low < estimate.ci_low and wider.ci_high > estimate.ci_high
    assert wider.p_hat == estimate.p_hat


def test_contains_and_intersects():
    estimate = Estimate.from_counts(50, 100)
    assert estimate.contains(0.5)
    assert not estimate.contains(0.9)
    assert estimate.intersects(0.55, 0.95)
    assert not estimate.intersects(0.7, 0.9)
    assert "50/100" in str(estimate)


@pytest.mark.parametrize("successes, trials, level", [(1, 0, 0.95), (5, 4, 0.95), (-1, 4, 0.95), (2, 4, 1.0)])
def test_rejects_invalid_counts(successes, trials, level):
    with pytest.raises(RejectedInputError):
        wilson_interval(successes, trials, level)
