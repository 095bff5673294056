"""Tests for the simulate command line."""

import json
import pytest
from src import cli
from src.sim.config import figure_preset, save_config, spec_from_dict
from src.sim.harness import parse_table

SMALL = ["--n", "40", "--m", "20", "--r", "16", "--k", "2", "--a", "2", "--beta", "0.5", "--iters", "8"]


@pytest.fixture(autouse=True)
def no_log_file(monkeypatch):
    monkeypatch.setattr(cli.settings, "LOG_FILE", "")


def test_single_point_to_stdout(capsysbinary):
    """Test a single point written as CSV to stdout."""
    assert cli.run(SMALL + ["--delivery", "orr"]) == 0
    table = parse_table(capsysbinary.readouterr().out, "csv")
    (row,) = table.rows
    assert (row.placement, row.delivery, row.iterations) == ("pp", "orr", 8)


def test_sweep_to_file(tmp_path):
    """Test a sweep written as JSON to a file."""
    out = tmp_path / "rates.json"
    code = cli.run(SMALL + ["--sweep", "k=1,2", "--format", "json", "--out", str(out)])
    assert code == 0
    table = parse_table(out.read_bytes(), "json")
    assert [row.value for row in table.rows] == [1.0, 2.0]
    assert table.metadata["rows"][1]["k"] == 2


def test_output_independent_of_workers(tmp_path):
    """Output bytes do not depend on the worker count."""
    outputs = []
    for workers in ("1", "2"):
        out = tmp_path / f"w{workers}.csv"
        assert cli.run(SMALL + ["--sweep", "ak=2,4", "--delivery", "omr", "--seed", "42",
                                "--workers", workers, "--out", str(out)]) == 0
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1]


def test_dump_config_applies_overrides(capsys):
    """Test that flags override the preset in --dump-config."""
    assert cli.run(["--preset", "fig8iii", "--iters", "50", "--rho", "0.5"]
                   + ["--dump-config"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["iterations"] == 50
    assert data["rho"] == 0.5
    assert "r" not in data
    assert data["delivery"] == ["omr", "mlp", "orr", "ollr"]


def test_series_flag_overrides_preset(capsys):
    """--series replaces the preset's series."""
    assert cli.run(["--preset", "fig8i", "--series", "a=2,4", "--dump-config"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["series"] == "a=2.0,4.0"
    assert data["sweep"].startswith("k=")


def test_config_file(tmp_path, capsys):
    """Test loading a config file."""
    path = tmp_path / "cfg.json"
    save_config(spec_from_dict({"n": 30, "m": 10, "r": 8, "iterations": 4, "delivery": "ollr"}), str(path))
    assert cli.run(["--config", str(path), "--dump-config"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["delivery"] == "ollr"
    assert data["n"] == 30


def test_preset_dump_matches_preset(capsys):
    """The dumped preset parses back to the preset."""
    assert cli.run(["--preset", "fig9ii", "--dump-config"]) == 0
    assert spec_from_dict(json.loads(capsys.readouterr().out)) == figure_preset("fig9ii")


@pytest.mark.parametrize(
    "argv",
    [
        ["--m", "5", "--r", "5"],
        ["--n", "10", "--m", "5"],
        ["--n", "10", "--m", "5", "--r", "5", "--sweep", "q=1"],
        ["--preset", "fig99"],
        ["--n", "10", "--m", "5", "--r", "5", "--workers", "0"],
        ["--n", "10", "--m", "5", "--r", "5", "--placement", "ks", "--beta", "0.5"],
    ],
)
def test_invalid_configuration_exits_2(argv):
    """Invalid configurations exit with status 2."""
    assert cli.run(argv) == 2


def test_argparse_errors_exit_2():
    """Test argparse errors exit with status 2."""
    with pytest.raises(SystemExit) as exc:
        cli.run(["--n", "10", "--r", "5", "--rho", "0.5"])
    assert exc.value.code == 2


def test_unwritable_output_exits_1(tmp_path):
    """An unwritable output path exits with status 1."""
    out = tmp_path / "missing" / "out.csv"
    assert cli.run(SMALL + ["--out", str(out)]) == 1


def test_infeasible_placement_exits_1():
    """Test an infeasible placement exits with status 1."""
    assert cli.run(["--n", "5", "--m", "2", "--r", "2", "--a", "3", "--iters", "2"]) == 1
