import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from socialdsa.channel import ChannelParams, IDLE
from socialdsa.errors import ConfigurationError
from socialdsa.game import (GameInstance, StrategyProfile, best_response, brute_force_nash_set, enumerate_profiles,
                            potential, potential_sign_violations, profile_index, solve_nash, success_probability,
                            tabulate_game, utility, verify_nash)
from socialdsa.validation import random_game


def _game(interference, contention, means, idle_probs):
    return GameInstance(interference=np.array(interference, dtype=bool), contention=np.array(contention),
                        means=np.array(means, dtype=float), idle_probs=np.array(idle_probs, dtype=float))


def _isolated(n):
    return np.zeros((n, n), dtype=bool)


def test_success_probability_multiplies_co_channel_keep_factors():
    star = [[0, 1, 1], [1, 0, 0], [1, 0, 0]]
    game = _game(star, [0.2, 0.1, 0.3], np.full((3, 1), 10.0), np.full((3, 1), 0.5))
    assert success_probability(game, StrategyProfile((0, 0, 0)), 0) == pytest.approx(0.126)


def test_half_contention_neighbor_halves_success():
    game = _game([[0, 1], [1, 0]], [0.4, 0.5], np.full((2, 2), 10.0), np.full((2, 2), 0.5))
    apart = success_probability(game, StrategyProfile((0, 1)), 0)
    together = success_probability(game, StrategyProfile((0, 0)), 0)
    assert together == pytest.approx(apart / 2)


def test_utility_of_isolated_user():
    game = _game(_isolated(1), [0.2], [[10.0]], [[0.5]])
    assert utility(game, StrategyProfile((0,)), 0) == pytest.approx(1.0)


def test_utility_from_idle_recommendation():
    channels = [ChannelParams(0, 0.2, 0.2)]
    game = GameInstance.from_recommendations(_isolated(1), np.array([0.3]), np.array([[20.0]]), channels,
                                             np.array([[IDLE]]))
    assert utility(game, StrategyProfile((0,)), 0) == pytest.approx(4.8)


def test_single_user_potential():
    game = _game(_isolated(1), [0.5], [[3.2]], [[0.5]])
    expected = -math.log(0.5) * math.log(0.8)
    assert potential(game, StrategyProfile((0,))) == pytest.approx(expected)
    assert expected == pytest.approx(-0.1547, abs=1e-4)


def test_potential_without_co_channel_pairs_is_sum_of_own_terms():
    complete = ~np.eye(3, dtype=bool)
    contention = np.array([0.2, 0.4, 0.6])
    means = np.array([[10.0, 20.0, 30.0]] * 3)
    idle = np.full((3, 3), 0.5)
    game = _game(complete, contention, means, idle)
    profile = StrategyProfile((0, 1, 2))
    expected = sum(-math.log(1 - contention[n]) * math.log(idle[n, n] * means[n, n] * contention[n]) for n in range(3))
    assert potential(game, profile) == pytest.approx(expected)


def test_best_response_picks_higher_payoff():
    game = _game(_isolated(1), [0.5], [[10.0, 50.0]], [[0.8, 0.5]])
    assert best_response(game, StrategyProfile((0,)), 0) == 1


def test_best_response_keeps_unique_optimum():
    game = _game(_isolated(1), [0.5], [[10.0, 50.0]], [[0.8, 0.5]])
    assert best_response(game, StrategyProfile((1,)), 0) == 1


def test_best_response_keeps_current_channel_on_tie():
    game = _game(_isolated(1), [0.5], [[10.0, 10.0]], [[0.5, 0.5]])
    assert best_response(game, StrategyProfile((1,)), 0) == 1
    assert best_response(game, StrategyProfile((0,)), 0) == 0


def test_solver_returns_equilibrium_start_unchanged():
    game = _game(_isolated(2), [0.5, 0.5], [[10.0, 50.0], [10.0, 50.0]], [[0.5, 0.5], [0.5, 0.5]])
    start = StrategyProfile((1, 1))
    solution = solve_nash(game, start)
    assert solution.converged
    assert solution.profile == start
    assert solution.iterations == 0
    assert solution.evaluations == 2


def test_identical_interfering_users_split_channels():
    game = _game([[0, 1], [1, 0]], [0.4, 0.4], np.full((2, 2), 10.0), np.full((2, 2), 0.5))
    solution = solve_nash(game, StrategyProfile((0, 0)))
    assert solution.converged
    assert solution.profile.choices[0] != solution.profile.choices[1]
    assert brute_force_nash_set(game) == {(0, 1), (1, 0)}


def test_verify_nash_rejects_profitable_deviation():
    # user 1 gains 10% by moving away from the shared channel
    game = _game([[0, 1], [1, 0]], [0.5, 0.5], [[10.0, 10.0], [10.0, 5.5]], np.full((2, 2), 0.5))
    assert not verify_nash(game, StrategyProfile((0, 0)))
    assert verify_nash(game, StrategyProfile((0, 1)))


def test_verify_nash_single_user_on_argmax():
    game = _game(_isolated(1), [0.3], [[5.0, 7.0, 6.0]], [[0.5, 0.5, 0.5]])
    assert verify_nash(game, StrategyProfile((1,)))
    assert not verify_nash(game, StrategyProfile((0,)))


def test_invalid_profile_rejected():
    game = _game(_isolated(2), [0.5, 0.5], np.full((2, 2), 10.0), np.full((2, 2), 0.5))
    with pytest.raises(ConfigurationError):
        utility(game, StrategyProfile((0, 2)), 0)
    with pytest.raises(ConfigurationError):
        solve_nash(game, StrategyProfile((0,)))


def test_open_interval_idle_probabilities_required():
    with pytest.raises(ConfigurationError):
        _game(_isolated(1), [0.5], [[10.0]], [[1.0]])


def test_enumeration_order_matches_profile_index():
    profiles = enumerate_profiles(3, 2)
    assert len(profiles) == 8
    for row, choices in enumerate(profiles):
        assert profile_index(choices, 2) == row


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1))
def test_potential_tracks_every_unilateral_deviation(seed):
    game = random_game(np.random.default_rng(seed))
    assert potential_sign_violations(game) == 0


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1))
def test_solver_lands_in_enumerated_equilibrium_set(seed):
    rng = np.random.default_rng(seed)
    game = random_game(rng, max_users=5)
    start = StrategyProfile(rng.integers(0, game.n_channels, size=game.n_users))
    solution = solve_nash(game, start, record_trace=True)
    assert solution.converged
    assert verify_nash(game, solution.profile)
    assert solution.profile.choices in brute_force_nash_set(game)
    trace = np.array(solution.trace)
    assert (np.diff(trace) >= -1e-9 * np.abs(trace).max()).all()


def test_tabulated_utilities_match_direct_evaluation():
    game = random_game(np.random.default_rng(3), max_users=4)
    table = tabulate_game(game)
    for row, choices in enumerate(table.profiles):
        profile = StrategyProfile(tuple(choices))
        assert table.potentials[row] == pytest.approx(potential(game, profile))
        for user in range(game.n_users):
            assert table.utilities[row, user, choices[user]] == pytest.approx(utility(game, profile, user))
