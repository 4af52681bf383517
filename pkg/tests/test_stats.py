import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from csebandit import (
    DomainError,
    InvalidDimensionError,
    NoDataError,
    QuerySet,
    StatisticKind,
    StatisticState,
    Transform,
    empirical_borda,
)

from _oracles import (
    batch_mean,
    batch_median,
    batch_power_mean,
    batch_r_transform,
    batch_winner_frequency,
)

PAIR = QuerySet((0, 1))


def feed(kind, q, rows):
    state = StatisticState(kind, q)
    for row in rows:
        state.update(np.asarray(row, dtype=float))
    return state


def test_winner_frequency_counts():
    # winners arm0, arm0, arm1 -> (2/3, 1/3); oracle recounts the batch
    rows = [(1, 0), (1, 0), (0, 1)]
    state = feed(StatisticKind.winner_frequency(), PAIR, rows)
    np.testing.assert_allclose(state.values(), batch_winner_frequency(rows))
    np.testing.assert_allclose(state.values(), [2 / 3, 1 / 3])


def test_empirical_mean_zero_case():
    state = feed(StatisticKind.empirical_mean(), PAIR, [(0, 0), (0, 0)])
    np.testing.assert_array_equal(state.values(), [0.0, 0.0])


def test_power_mean_q2():
    # stream 1, 2, 2 for the first arm -> sqrt((1+4+4)/3) = sqrt(3)
    rows = [(1, 0.5), (2, 0.5), (2, 0.5)]
    state = feed(StatisticKind.power_mean(2), PAIR, rows)
    np.testing.assert_allclose(state.values(), batch_power_mean(rows, 2))
    assert state.values()[0] == pytest.approx(np.sqrt(3.0), abs=1e-12)


def test_median_odd_and_even():
    odd = [(1, 9), (3, 9), (2, 9)]
    state = feed(StatisticKind.median(), PAIR, odd)
    np.testing.assert_allclose(state.values(), batch_median(odd))
    assert state.values()[0] == 2.0
    even = [(1, 0), (2, 0), (3, 0), (4, 0)]
    state = feed(StatisticKind.median(), PAIR, even)
    assert state.values()[0] == 2.5


def test_mean_matches_running_sum_over_t():
    rows = [(0.3, -1.0), (0.7, 2.0), (0.1, 0.0)]
    state = feed(StatisticKind.empirical_mean(), PAIR, rows)
    np.testing.assert_allclose(state.values(), batch_mean(rows))


def test_identity_transform_reproduces_mean_exactly():
    rng = np.random.default_rng(5)
    rows = rng.normal(size=(37, 2))
    mean = feed(StatisticKind.empirical_mean(), PAIR, rows)
    ident = feed(StatisticKind.r_transform_mean(Transform.identity()), PAIR, rows)
    np.testing.assert_array_equal(mean.values(), ident.values())


def test_named_transforms():
    rows = np.array([[0.2, 1.4], [0.8, -0.5]])
    clip = feed(StatisticKind.r_transform_mean(Transform.clip(0.0, 1.0)), PAIR, rows)
    np.testing.assert_allclose(clip.values(), batch_r_transform(rows, lambda x: np.clip(x, 0, 1)))
    thresh = feed(
        StatisticKind.r_transform_mean(Transform.indicator_threshold(0.5)), PAIR, rows
    )
    np.testing.assert_allclose(thresh.values(), [0.5, 0.5])


class TestErrors:
    def test_misaligned_vector(self):
        state = StatisticState(StatisticKind.empirical_mean(), PAIR)
        with pytest.raises(InvalidDimensionError):
            state.update(np.zeros(3))

    def test_winner_domain(self):
        state = StatisticState(StatisticKind.winner_frequency(), PAIR)
        with pytest.raises(DomainError):
            state.update(np.array([0.4, 0.6]))
        with pytest.raises(DomainError):
            state.update(np.array([1.0, 1.0]))

    def test_no_data(self):
        state = StatisticState(StatisticKind.median(), PAIR)
        with pytest.raises(NoDataError):
            state.values()

    def test_non_finite_rejected(self):
        state = StatisticState(StatisticKind.empirical_mean(), PAIR)
        with pytest.raises(DomainError):
            state.update(np.array([np.nan, 0.0]))


def test_winner_frequency_normalizes():
    rng = np.random.default_rng(0)
    q = QuerySet((0, 1, 2))
    state = StatisticState(StatisticKind.winner_frequency(), q)
    for _ in range(57):
        row = np.zeros(3)
        row[rng.integers(3)] = 1.0
        state.update(row)
        assert state.values().sum() == pytest.approx(1.0)


@given(st.lists(st.lists(st.floats(-5, 5), min_size=2, max_size=2), min_size=1, max_size=60))
@settings(max_examples=100)
def test_median_is_permutation_invariant(rows):
    state_a = feed(StatisticKind.median(), PAIR, rows)
    state_b = feed(StatisticKind.median(), PAIR, rows[::-1])
    np.testing.assert_array_equal(state_a.values(), state_b.values())


def test_batched_update_equals_sequential():
    rng = np.random.default_rng(11)
    rows = rng.normal(size=(40, 2))
    one = StatisticState(StatisticKind.empirical_mean(), PAIR).update(rows)
    two = feed(StatisticKind.empirical_mean(), PAIR, rows)
    np.testing.assert_allclose(one.values(), two.values(), atol=1e-12)
    assert one.t == two.t == 40


class TestBorda:
    def test_worked_example(self):
        states = {}
        q1, q2 = QuerySet((0, 1)), QuerySet((0, 2))
        states[q1] = feed(StatisticKind.empirical_mean(), q1, [(0.9, 0.3)])
        states[q2] = feed(StatisticKind.empirical_mean(), q2, [(0.8, 0.3)])
        # average of the two observed statistics of arm 0
        assert empirical_borda(states, 0) == pytest.approx(0.85)

    def test_constant_statistics(self):
        states = {}
        for arms in ((0, 1), (0, 2), (1, 2)):
            q = QuerySet(arms)
            states[q] = feed(StatisticKind.empirical_mean(), q, [(0.4, 0.4)])
        for arm in range(3):
            assert empirical_borda(states, arm) == pytest.approx(0.4)

    def test_single_observed_set(self):
        q = QuerySet((1, 3))
        states = {q: feed(StatisticKind.empirical_mean(), q, [(0.2, 0.6)])}
        assert empirical_borda(states, 3) == pytest.approx(0.6)

    def test_unobserved_arm(self):
        q = QuerySet((0, 1))
        states = {q: StatisticState(StatisticKind.empirical_mean(), q)}
        with pytest.raises(NoDataError):
            empirical_borda(states, 0)
        with pytest.raises(NoDataError):
            empirical_borda(states, 5)
