import pytest

from socialdsa import cli
from socialdsa.cli import EXIT_CONFIG_ERROR, EXIT_IO_ERROR, EXIT_OK, EXIT_VALIDATION_FAILED, build_parser, main
from socialdsa.errors import ConfigurationError, ConsistencyError
from socialdsa.results import rows_from_csv
from socialdsa.validation import run_suite

TINY = """
[channels]
n_channels = 2
lambda = 0.2
mu = 0.2

[users]
n_users = 4

[policy]
policy = {policy}

[run]
horizon_slots = 30
replications = 2
residual_samples = 0
"""


@pytest.fixture
def tiny_config(tmp_path):
    def write(policy="strong", extra=""):
        path = tmp_path / f"tiny-{policy}.ini"
        path.write_text(TINY.format(policy=policy) + extra)
        return path
    return write


def test_run_writes_result_table(tiny_config, tmp_path, capsys):
    out = tmp_path / "out.csv"
    assert main(["run", "--config", str(tiny_config()), "--out", str(out)]) == EXIT_OK
    rows = rows_from_csv(out.read_text())
    assert len(rows) == 1
    assert rows[0].experiment_id == "tiny-strong"
    assert "[strong] throughput" in capsys.readouterr().out


def test_rerun_is_byte_identical(tiny_config, tmp_path):
    config = str(tiny_config(extra="sweep = p_link\nsweep_values = 0.1, 0.9\n"))
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["run", "--config", config, "--out", str(first)]) == EXIT_OK
    assert main(["run", "--config", config, "--out", str(second), "--workers", "2"]) == EXIT_OK
    assert first.read_bytes() == second.read_bytes()
    assert [r.axis_value for r in rows_from_csv(first.read_text())] == [0.1, 0.9]


def test_sweep_override(tiny_config, tmp_path):
    out = tmp_path / "out.csv"
    args = ["run", "--config", str(tiny_config()), "--out", str(out), "--sweep", "N", "--values", "3,5"]
    assert main(args) == EXIT_OK
    rows = rows_from_csv(out.read_text())
    assert [(r.axis, r.n_users) for r in rows] == [("n_users", 3), ("n_users", 5)]


def test_p_rec_search_without_values(tiny_config, tmp_path, capsys):
    out = tmp_path / "out.csv"
    assert main(["run", "--config", str(tiny_config()), "--out", str(out), "--sweep", "p_rec"]) == EXIT_OK
    rows = rows_from_csv(out.read_text())
    assert len(rows) == 11
    assert {r.policy for r in rows} == {"static_rec"}
    assert "best p_rec" in capsys.readouterr().out


def test_values_without_sweep(tiny_config):
    assert main(["run", "--config", str(tiny_config()), "--values", "1,2"]) == EXIT_CONFIG_ERROR


def test_invalid_config_exit_code(tiny_config):
    path = tiny_config(extra="\n[topology]\ndelta = -1\n")
    assert main(["run", "--config", str(path)]) == EXIT_CONFIG_ERROR


def test_missing_config_exit_code(tmp_path):
    assert main(["run", "--config", str(tmp_path / "absent.ini")]) == EXIT_IO_ERROR


def test_dump_perceptions(tiny_config, tmp_path):
    dump_dir = tmp_path / "perceptions"
    args = ["run", "--config", str(tiny_config("weak")), "--out", str(tmp_path / "out.csv"),
            "--dump-perceptions", str(dump_dir)]
    assert main(args) == EXIT_OK
    dumped = sorted(p.name for p in dump_dir.iterdir())
    assert dumped == ["tiny-weak_rep0.csv", "tiny-weak_rep1.csv"]
    assert (dump_dir / "tiny-weak_rep0.csv").read_text().startswith("user,channel,state,value_mbps,visits\n")


def test_validate_small_scale(capsys):
    assert main(["--quiet", "validate", "potential-oracle", "--scale", "0.01"]) == EXIT_OK
    assert "potential-oracle: 5 passed, 0 failed" in capsys.readouterr().out


def test_validate_unknown_suite():
    assert main(["validate", "bogus"]) == EXIT_CONFIG_ERROR
    with pytest.raises(ConfigurationError, match="valid suites: potential-oracle"):
        run_suite("bogus")


def test_parser_requires_a_command():
    with pytest.raises(SystemExit):
        build_parser().parse_args([])


def test_consistency_error_maps_to_failure_exit(monkeypatch):
    def inconsistent(*args, **kwargs):
        raise ConsistencyError("user 0 received idle and busy reports for channel 1 in one slot")

    monkeypatch.setattr(cli, "run_suite", inconsistent)
    assert main(["validate", "potential-oracle"]) == EXIT_VALIDATION_FAILED
