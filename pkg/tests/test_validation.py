import numpy as np
import pytest

from socialdsa import learn
from socialdsa.engine import Simulator
from socialdsa.errors import ConfigurationError
from socialdsa.recommend import idle_probability_from_state
from socialdsa.validation import (SUITES, SuiteReport, _with_contraction_beta, family_critical_value,
                                  informed_state_gap, random_game, run_suite, small_learning_config)


def test_suite_names():
    assert set(SUITES) == {"potential-oracle", "nash-oracle", "contraction", "fixed-point", "stationary",
                           "gap-bound"}


def test_report_bookkeeping():
    report = SuiteReport("demo")
    report.record(True, "fine")
    report.record(False, "broken")
    assert (report.passed, report.failed, report.failures) == (1, 1, ["broken"])
    assert not report.ok


def test_random_games_stay_small():
    rng = np.random.default_rng(0)
    for _ in range(50):
        game = random_game(rng)
        assert 1 <= game.n_users <= 6 and 1 <= game.n_channels <= 3


def test_family_critical_value():
    assert family_critical_value(1) == pytest.approx(3.0)
    assert family_critical_value(0) == pytest.approx(3.0)
    values = [family_critical_value(n) for n in (1, 10, 100)]
    assert values == sorted(values)
    assert 3.5 < values[1] < 4.5


@pytest.mark.parametrize("name", ["potential-oracle", "nash-oracle"])
def test_game_oracles_pass(name):
    report = run_suite(name, scale=0.02, seed=3)
    assert report.ok
    assert report.passed == 10


def test_stationary_suite_checks_every_channel():
    report = run_suite("stationary", scale=0.05, seed=1)
    assert report.passed + report.failed == 4


def test_contraction_suite_closed_forms_pass():
    report = run_suite("contraction", scale=0.02, seed=2)
    assert report.passed + report.failed == 4
    assert not any("B_max" in f or "degree 0" in f for f in report.failures)


def test_first_learning_instance_uses_desk_channels():
    config = small_learning_config(np.random.default_rng(5), horizon=100, seed=5)
    assert 2 <= config.n_users <= 4 and 1 <= config.n_channels <= 3
    assert config.lambdas == config.mus == (0.2,) * config.n_channels
    simulator = Simulator(config, 0)
    assert simulator.learner_config.payoff_scale == config.b_max


@pytest.mark.parametrize("index", [0, 1, 2, 3])
def test_learning_instances_are_persistent(index):
    config = small_learning_config(np.random.default_rng(index), horizon=100, seed=index, index=index)
    for params in config.channel_params():
        assert params.lam + params.mu < 1.0
        assert idle_probability_from_state(params, 1) - idle_probability_from_state(params, -1) >= 0.4


def test_informed_state_gap():
    table = learn.PerceptionTable.initial(2, 2)
    assert informed_state_gap(table) is None
    idle, busy = learn.state_axis(1), learn.state_axis(-1)
    table.counts[0, 1, idle] = table.counts[0, 1, busy] = 25
    table.values[0, 1, idle], table.values[0, 1, busy] = 0.6, 0.1
    table.counts[1, 0, idle] = 25
    assert informed_state_gap(table) == pytest.approx(0.5)


@pytest.mark.parametrize("name", ["fixed-point", "gap-bound"])
def test_learning_suites_pass_at_small_scale(name):
    report = run_suite(name, scale=0.02, seed=4)
    assert report.passed >= 1
    assert report.ok, report.failures


def test_fixed_point_suite_checks_informed_perceptions():
    report = run_suite("fixed-point", scale=0.02, seed=4)
    # residual check plus the idle-over-busy ordering
    assert report.passed == 2


def test_contraction_beta_is_half_the_bound():
    config = small_learning_config(np.random.default_rng(6), horizon=10, seed=6)
    scout = Simulator(config, 0)
    degree = scout.scenario.topology.interference_degree_max
    adjusted = _with_contraction_beta(config, scout)
    if degree:
        check = learn.check_contraction_condition(1.0, degree, adjusted.beta)
        assert check.satisfied and check.modulus == pytest.approx(0.5)
    else:
        assert adjusted.beta == 1.0


def test_unknown_suite():
    with pytest.raises(ConfigurationError):
        run_suite("bogus")
