import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from socialdsa.channel import BUSY, IDLE, ChannelParams, FadingKind, FadingModel
from socialdsa.errors import ConfigurationError
from socialdsa.learn import (AlphaSchedule, LearnerConfig, LearningContext, PerceptionTable, boltzmann_gap,
                             boltzmann_strategies, boltzmann_strategy, check_contraction_condition,
                             dump_perception_table, estimate_expected_throughput_operator, fixed_point_residual,
                             learning_step, max_norm_change, relevant_values, state_axis, update_perception,
                             update_perceptions)


def _config(**overrides):
    return LearnerConfig(**{"beta": 1.0, **overrides})


def _context(n_users, n_channels, interference=None, contention=0.3, means=10.0, beta=1.0, lam=0.2, mu=0.2):
    interference = np.zeros((n_users, n_users), dtype=bool) if interference is None else interference
    return LearningContext(
        channels=tuple(ChannelParams(m, lam, mu) for m in range(n_channels)),
        interference=np.asarray(interference, dtype=bool),
        contention=np.full(n_users, contention),
        fading=FadingModel(FadingKind.CONSTANT, np.full((n_users, n_channels), means)),
        rec_state_pool=np.zeros((1, n_users, n_channels), dtype=np.int64),
        beta=beta,
    )


def test_state_axis_order():
    assert [state_axis(s) for s in (IDLE, 0, BUSY)] == [0, 1, 2]


def test_first_harmonic_update_replaces_value():
    table = PerceptionTable.initial(1, 2)
    update_perception(table, 0, 1, IDLE, 7.5, _config())
    assert table.values[0, 1, state_axis(IDLE)] == 7.5


def test_update_at_fixed_point_is_unchanged():
    table = PerceptionTable.initial(1, 1, initial_value=10.0)
    update_perception(table, 0, 0, 0, 10.0, _config(alpha_schedule=AlphaSchedule.CONSTANT, alpha0=0.3))
    assert table.values[0, 0, state_axis(0)] == 10.0


def test_constant_step_recurrence():
    table = PerceptionTable.initial(1, 1, initial_value=0.0)
    config = _config(alpha_schedule=AlphaSchedule.CONSTANT, alpha0=0.5)
    update_perception(table, 0, 0, BUSY, 4.0, config)
    assert table.values[0, 0, state_axis(BUSY)] == pytest.approx(2.0)
    update_perception(table, 0, 0, BUSY, 8.0, config)
    assert table.values[0, 0, state_axis(BUSY)] == pytest.approx(5.0)


def test_global_harmonic_step_follows_user_step_count():
    table = PerceptionTable.initial(1, 2, initial_value=0.0)
    config = _config(alpha_schedule=AlphaSchedule.GLOBAL_HARMONIC)
    update_perception(table, 0, 0, IDLE, 4.0, config)
    update_perception(table, 0, 1, IDLE, 9.0, config)
    # second update of the user uses alpha = 1/2 even on a fresh cell
    assert table.values[0, 1, state_axis(IDLE)] == pytest.approx(4.5)


def test_update_touches_only_the_played_cell():
    table = PerceptionTable.initial(3, 4)
    before = table.values.copy()
    update_perception(table, 1, 2, 0, 3.0, _config())
    changed = np.argwhere(table.values != before)
    assert changed.tolist() == [[1, 2, state_axis(0)]]


def test_negative_payoff_rejected():
    with pytest.raises(ValueError):
        update_perception(PerceptionTable.initial(1, 1), 0, 0, 0, -1.0, _config())


def test_payoff_scale_normalizes_updates():
    table = PerceptionTable.initial(1, 1)
    update_perception(table, 0, 0, IDLE, 25.0, _config(payoff_scale=50.0))
    assert table.values[0, 0, 0] == pytest.approx(0.5)


@pytest.mark.parametrize("overrides", [{"beta": 0.0}, {"alpha_schedule": "constant", "alpha0": 1.5},
                                       {"initial_value": -1.0}])
def test_learner_config_validation(overrides):
    with pytest.raises(ConfigurationError):
        _config(**overrides)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1))
def test_per_cell_harmonic_value_is_sample_mean(seed):
    rng = np.random.default_rng(seed)
    table = PerceptionTable.initial(2, 3)
    config = _config()
    for _ in range(200):
        choices = rng.integers(0, 3, size=2)
        states = rng.choice([IDLE, 0, BUSY], size=2)
        learning_step(table, config, choices, states, rng.exponential(10.0, size=2),
                      rng.choice([IDLE, 0, BUSY], size=(2, 3)), rng)
    visited = table.visited
    np.testing.assert_allclose(table.values[visited], table.payoff_sums[visited] / table.counts[visited])
    assert (table.values[~visited] == 1.0).all()
    assert (table.steps == 200).all()


def test_slot_update_takes_one_state_per_user():
    table = PerceptionTable.initial(2, 3)
    with pytest.raises(ValueError, match="one recommendation state per user"):
        update_perceptions(table, np.array([0, 1]), np.zeros((2, 3), dtype=np.int8), np.array([1.0, 2.0]),
                           _config())
    assert table.counts.sum() == 0


def test_stationary_payoffs_converge_to_mean():
    rng = np.random.default_rng(17)
    table = PerceptionTable.initial(1, 1, initial_value=0.0)
    config = _config()
    for _ in range(20_000):
        update_perception(table, 0, 0, IDLE, rng.exponential(6.0), config)
    se = table.standard_errors()[0, 0, 0]
    assert abs(table.values[0, 0, 0] - 6.0) < 4 * se


def test_uniform_strategy_when_values_equal():
    table = PerceptionTable.initial(1, 4, initial_value=3.0)
    np.testing.assert_allclose(boltzmann_strategy(table, 0, np.zeros(4), 2.0), 0.25)


def test_tiny_beta_is_uniform():
    table = PerceptionTable.initial(1, 3)
    table.values[0, :, 1] = [10.0, 40.0, 90.0]
    np.testing.assert_allclose(boltzmann_strategy(table, 0, np.zeros(3), 1e-9), 1 / 3, atol=1e-6)


def test_closed_form_two_channel_softmax():
    beta = 3.0
    table = PerceptionTable.initial(1, 2)
    table.values[0, :, state_axis(IDLE)] = [math.log(2) / beta, 0.0]
    sigma = boltzmann_strategy(table, 0, np.array([IDLE, IDLE]), beta)
    np.testing.assert_allclose(sigma, [2 / 3, 1 / 3])


def test_strategy_reads_cells_of_current_state():
    table = PerceptionTable.initial(1, 2, initial_value=0.0)
    table.values[0, 0, state_axis(BUSY)] = 100.0
    table.values[0, 1, state_axis(IDLE)] = 100.0
    assert boltzmann_strategy(table, 0, np.array([BUSY, 0]), 1.0)[0] > 0.99
    assert boltzmann_strategy(table, 0, np.array([0, IDLE]), 1.0)[1] > 0.99


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), shift=st.floats(-50.0, 50.0), beta=st.floats(0.01, 5.0))
def test_boltzmann_rows_sum_to_one_and_ignore_shifts(seed, shift, beta):
    rng = np.random.default_rng(seed)
    table = PerceptionTable.initial(3, 4)
    table.values[:] = rng.uniform(0.0, 20.0, size=table.values.shape)
    rec_states = rng.choice([IDLE, 0, BUSY], size=(3, 4))
    sigma = boltzmann_strategies(table, rec_states, beta)
    np.testing.assert_allclose(sigma.sum(axis=1), 1.0, atol=1e-12)
    shifted = table.copy()
    shifted.values += shift
    np.testing.assert_allclose(boltzmann_strategies(shifted, rec_states, beta), sigma, atol=1e-12)
    np.testing.assert_allclose(sigma[1], boltzmann_strategy(table, 1, rec_states[1], beta))
    assert relevant_values(table, rec_states).shape == (3, 4)


def test_contraction_examples():
    check = check_contraction_condition(50.0, 5, 0.001)
    assert check.satisfied
    assert check.bound == pytest.approx(0.002)
    assert check.modulus == pytest.approx(0.5)
    check = check_contraction_condition(50.0, 5, 3.0)
    assert not check.satisfied
    assert check.modulus == pytest.approx(1500.0)


def test_contraction_without_interference():
    check = check_contraction_condition(50.0, 0, 1e6)
    assert check.satisfied and math.isinf(check.bound)


def test_isolated_operator_matches_closed_form():
    context = _context(1, 2)
    table = PerceptionTable.initial(1, 2)
    estimate = estimate_expected_throughput_operator(context, table, 0, 1, IDLE, 40_000, np.random.default_rng(1))
    expected = 0.8 * 10.0 * 0.3
    assert abs(estimate.mean - expected) < 4 * estimate.stderr


def test_single_sample_operator_is_zero_or_full_rate():
    context = _context(1, 1)
    estimate = estimate_expected_throughput_operator(context, PerceptionTable.initial(1, 1), 0, 0, 0, 1,
                                                     np.random.default_rng(0))
    assert estimate.mean in (0.0, 10.0)
    assert math.isinf(estimate.stderr)


def test_two_user_operator_with_uniform_rival():
    interference = np.array([[0, 1], [1, 0]], dtype=bool)
    context = _context(2, 2, interference=interference, contention=0.5)
    table = PerceptionTable.initial(2, 2)
    estimate = estimate_expected_throughput_operator(context, table, 0, 0, 0, 80_000, np.random.default_rng(5))
    # rival lands on channel 0 half the time and then contends half the time
    expected = 0.5 * 10.0 * 0.5 * (1 - 0.5 * 0.5)
    assert abs(estimate.mean - expected) < 4 * estimate.stderr


def test_operator_rejects_zero_samples():
    with pytest.raises(ValueError):
        estimate_expected_throughput_operator(_context(1, 1), PerceptionTable.initial(1, 1), 0, 0, 0, 0,
                                              np.random.default_rng(0))


def test_residual_ignores_unvisited_cells():
    report = fixed_point_residual(_context(1, 2), PerceptionTable.initial(1, 2), 100, np.random.default_rng(0))
    assert report.residual == 0.0
    assert report.unvisited == 6


def test_residual_positive_away_from_fixed_point():
    table = PerceptionTable.initial(1, 1)
    update_perception(table, 0, 0, 0, 9.0, _config())
    report = fixed_point_residual(_context(1, 1), table, 2000, np.random.default_rng(0))
    assert report.residual > 5.0


def test_equal_payoffs_do_not_claim_zero_spread():
    table = PerceptionTable.initial(1, 1)
    for _ in range(3):
        update_perception(table, 0, 0, 0, 0.0, _config())
    cell, = fixed_point_residual(_context(1, 1), table, 4000, np.random.default_rng(1)).cells
    assert table.standard_errors()[0, 0, state_axis(0)] == 0.0
    # operator payoffs are 10 Mbps with probability 0.5 * 0.3
    assert cell.value_stderr == pytest.approx(math.sqrt(100 * 0.15 * 0.85 / 3), rel=0.1)
    assert cell.z_score < 3.0


def test_isolated_learner_reaches_fixed_point():
    context = _context(1, 1)
    rng = np.random.default_rng(23)
    table = PerceptionTable.initial(1, 1)
    config = _config()
    omega, rate, p = 0.5, 10.0, 0.3
    for _ in range(20_000):
        success = rng.random() < omega * p
        update_perception(table, 0, 0, 0, rate if success else 0.0, config)
    report = fixed_point_residual(context, table, 40_000, rng)
    assert len(report.cells) == 1
    assert report.within(4.0)


def test_gap_vanishes_with_one_channel():
    table = PerceptionTable.initial(1, 1)
    gap = boltzmann_gap(_context(1, 1), table, 0, np.array([0]), 2.0, 500, np.random.default_rng(0))
    assert gap.bound == 0.0
    assert gap.gap == pytest.approx(0.0, abs=1e-12)


def test_gap_vanishes_on_identical_channels():
    table = PerceptionTable.initial(1, 3)
    table.values[0, :, 1] = [1.0, 2.0, 5.0]
    gap = boltzmann_gap(_context(1, 3), table, 0, np.zeros(3), 1.0, 2000, np.random.default_rng(3))
    assert gap.gap == pytest.approx(0.0, abs=1e-12)
    assert gap.bound == pytest.approx(math.log(3))


def test_max_norm_change():
    assert max_norm_change(np.array([1.0, 2.0]), np.array([1.5, 0.0])) == 2.0
    assert max_norm_change(np.array([]), np.array([])) == 0.0


def test_dump_perception_table(tmp_path):
    table = PerceptionTable.initial(2, 2)
    update_perception(table, 1, 0, BUSY, 0.4, _config())
    path = dump_perception_table(table, tmp_path / "rep0.csv", payoff_scale=50.0)
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 2 * 2 * 3
    played = [r for r in rows if r["user"] == "1" and r["channel"] == "0" and r["state"] == "-1"]
    assert played[0]["value_mbps"] == "20"
    assert played[0]["visits"] == "1"
