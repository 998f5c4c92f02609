import dataclasses
import math

import pytest

from socialdsa.engine import run_experiment
from socialdsa.results import (COLUMNS, ResultRow, config_hash, describe_social_graph, rows_from_csv, rows_to_csv,
                               write_results)
from socialdsa.sim_config import Policy, SimConfig, SocialGraphKind


def _config(**overrides):
    settings = dict(n_users=4, n_channels=2, lambdas=(0.2, 0.2), mus=(0.2, 0.2), horizon_slots=30,
                    replications=2, residual_samples=0, experiment_id="tiny")
    settings.update(overrides)
    return SimConfig(**settings)


def _row(**overrides):
    values = dict(experiment_id="x", axis="p_link", axis_value=0.2, policy="strong", n_users=20, n_channels=5,
                  p_link=0.2, delta=100.0, beta=3.0, p_rec=0.5, mean_throughput_mbps=12.3456789012345,
                  stderr_mbps=0.25, mean_iterations=11.5, max_iterations=31.0, within_budget_fraction=0.99,
                  contraction_modulus=math.nan, fixed_point_residual_mbps=math.nan, social_links=38.0,
                  replications=20, seed=1, config_hash="abc", social_graph="er")
    values.update(overrides)
    return ResultRow(**values)


def test_header_is_fixed():
    header = rows_to_csv([]).splitlines()[0]
    assert header.split(",") == list(COLUMNS)
    assert COLUMNS[:4] == ("experiment_id", "axis", "axis_value", "policy")


def test_missing_diagnostics_are_empty_fields():
    line = rows_to_csv([_row()]).splitlines()[1].split(",")
    record = dict(zip(COLUMNS, line))
    assert record["contraction_modulus"] == ""
    assert record["fixed_point_residual_mbps"] == ""
    assert record["mean_throughput_mbps"] == "12.3456789012"


def test_round_trip_at_twelve_digits():
    row = _row(mean_throughput_mbps=12.0, contraction_modulus=1500.0)
    (parsed,) = rows_from_csv(rows_to_csv([row]))
    assert dataclasses.replace(parsed, fixed_point_residual_mbps=0.0) == \
        dataclasses.replace(row, fixed_point_residual_mbps=0.0)
    assert math.isnan(parsed.fixed_point_residual_mbps)


def test_unexpected_header_rejected():
    with pytest.raises(ValueError):
        rows_from_csv("a,b,c\n1,2,3\n")


def test_negative_stderr_rejected():
    with pytest.raises(ValueError):
        _row(stderr_mbps=-1.0)


def test_config_hash_tracks_every_field():
    config = _config()
    assert config_hash(config) == config_hash(_config())
    assert config_hash(config) != config_hash(_config(seed=1))
    assert len(config_hash(config)) == 16


def test_social_graph_description(tmp_path):
    assert describe_social_graph(_config()) == "er"
    config = _config(social_graph=SocialGraphKind.EDGELIST, edgelist_path=tmp_path / "friends.txt")
    assert describe_social_graph(config) == "edgelist:friends.txt:random-n"


def test_rows_from_summaries(tmp_path):
    summaries = run_experiment(_config(compare=(Policy.BELIEF,)), workers=1)
    rows = [ResultRow.from_summary(s) for s in summaries]
    assert [r.policy for r in rows] == ["strong", "belief"]
    assert rows[0].axis == "" and math.isnan(rows[0].axis_value)
    assert rows[0].replications == 2
    assert rows[0].mean_iterations >= 0
    assert math.isnan(rows[1].mean_iterations)

    path = write_results(rows, tmp_path / "out" / "tiny.csv")
    assert path.read_text() == rows_to_csv(rows)
