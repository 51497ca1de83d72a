import io
import json

import numpy as np
import pandas as pd
import pytest
from typer.testing import CliRunner

from app.core.config import settings
from app.main import app
from app.schemas.simulation import ErrorModel, ErrorModelName, MeanModel
from app.services.simulation_service import simulate_series

runner = CliRunner()


@pytest.fixture
def series_csv(tmp_path):
    series = simulate_series(MeanModel(name="a"), ErrorModel(name=ErrorModelName.MODEL_I), n=500, seed=7)
    path = tmp_path / "series.csv"
    pd.DataFrame({"t": series.design_points, "x": series.values}).to_csv(path, index=False)
    return path


@pytest.fixture
def few_replications(monkeypatch):
    monkeypatch.setattr(settings, "min_replications", 1)


def test_reject(series_csv):
    result = runner.invoke(app, ["test", "--input", str(series_csv), "--c", "1.8", "--delta", "0.05",
                                 "--bandwidth", "0.2"])
    assert result.exit_code == 3
    document = json.loads(result.stdout)
    assert document["reject"] is True
    assert document["tuning"]["b_n"] == 0.2


def test_accept(series_csv, tmp_path):
    output = tmp_path / "out.json"
    result = runner.invoke(app, ["test", "--input", str(series_csv), "--c", "1.8", "--delta", "0.8",
                                 "--bandwidth", "0.2", "--output", str(output)])
    assert result.exit_code == 0
    document = json.loads(output.read_text(encoding="utf-8"))
    assert document["reject"] is False
    assert document["p_value"] > 0.05


def test_degenerate_accept(tmp_path):
    path = tmp_path / "flat.csv"
    path.write_text("x\n" + "\n".join(["1.0"] * 100) + "\n", encoding="utf-8")
    result = runner.invoke(app, ["test", "--input", str(path), "--c", "1", "--delta", "0.2", "--bandwidth", "0.2"])
    assert result.exit_code == 2
    assert json.loads(result.stdout)["degenerate_variance"] is True


def test_missing_input_file(tmp_path):
    result = runner.invoke(app, ["test", "--input", str(tmp_path / "nope.csv"), "--c", "1", "--delta", "0.2"])
    assert result.exit_code == 1
    assert json.loads(result.stderr.strip().splitlines()[-1])["error_code"] == "FILE_NOT_FOUND"


def test_delta_out_of_range(series_csv):
    result = runner.invoke(app, ["test", "--input", str(series_csv), "--c", "1", "--delta", "1.5"])
    assert result.exit_code == 1
    assert "delta" in result.stderr


def test_unknown_side(series_csv):
    result = runner.invoke(app, ["test", "--input", str(series_csv), "--c", "1", "--delta", "0.2", "--side", "up"])
    assert result.exit_code == 1


def test_parse_error_exit_code(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("x\n" + "\n".join(["1.0"] * 5 + ["oops"] + ["1.0"] * 10) + "\n", encoding="utf-8")
    result = runner.invoke(app, ["test", "--input", str(path), "--c", "1", "--delta", "0.2"])
    assert result.exit_code == 1
    error = json.loads(result.stderr.strip().splitlines()[-1])
    assert error["error_code"] == "PARSE_ERROR"
    assert error["details"]["row"] == 6


def test_multicolumn_needs_flag(tmp_path):
    path = tmp_path / "xy.csv"
    rng = np.random.default_rng(0)
    pd.DataFrame(rng.standard_normal((100, 2)), columns=["x", "y"]).to_csv(path, index=False)
    result = runner.invoke(app, ["test", "--input", str(path), "--c", "1", "--delta", "0.2"])
    assert result.exit_code == 1


def test_multivariate_flag(tmp_path):
    n = 150
    t = np.arange(1, n + 1) / n
    rng = np.random.default_rng(0)
    values = np.column_stack([2.0 * np.sin(np.pi * t), np.cos(np.pi * t) - 1.0]) + 0.2 * rng.standard_normal((n, 2))
    path = tmp_path / "xy.csv"
    pd.DataFrame(values, columns=["x", "y"]).to_csv(path, index=False)
    result = runner.invoke(app, ["test", "--input", str(path), "--c", "1", "--delta", "0.2",
                                 "--bandwidth", "0.2", "--multivariate", "--mc-draws", "1000", "--seed", "4"])
    assert result.exit_code == 3
    document = json.loads(result.stdout)
    assert document["t_plus"] > 0.5
    assert document["t_minus"] == 0.0


def test_estimate_json(series_csv):
    result = runner.invoke(app, ["estimate", "--input", str(series_csv), "--c", "1.8", "--bandwidth", "0.2"])
    assert result.exit_code == 0
    document = json.loads(result.stdout)
    assert document["t_plus"] == pytest.approx(0.316, abs=0.1)
    assert document["t_minus"] == 0.0
    assert document["t_total"] == pytest.approx(document["t_plus"] + document["t_minus"])


def test_estimate_csv(series_csv, tmp_path):
    output = tmp_path / "fit.csv"
    result = runner.invoke(app, ["estimate", "--input", str(series_csv), "--c", "1.8", "--bandwidth", "0.2",
                                 "--format", "csv", "--output", str(output)])
    assert result.exit_code == 0
    frame = pd.read_csv(output)
    assert list(frame.columns) == ["t", "mu_tilde", "mu_hat"]
    assert len(frame) == 501
    assert frame["t"].iloc[0] == 0.0


def test_lrv_csv(series_csv):
    result = runner.invoke(app, ["lrv", "--input", str(series_csv), "--lrv-m", "4", "--lrv-tau", "0.3"])
    assert result.exit_code == 0
    lines = result.stdout.strip().splitlines()
    assert lines[0] == "t,sigma2"
    assert len(lines) == 501


def test_lrv_needs_both_tuning_values(series_csv):
    result = runner.invoke(app, ["lrv", "--input", str(series_csv), "--lrv-m", "4"])
    assert result.exit_code == 1


def test_simulate_zero_reps():
    result = runner.invoke(app, ["simulate", "--preset", "table1", "--seed", "1", "--reps", "0"])
    assert result.exit_code == 1


def test_simulate_unknown_preset():
    result = runner.invoke(app, ["simulate", "--preset", "table9", "--seed", "1"])
    assert result.exit_code == 1
    assert "CONFIGURATION_ERROR" in result.stderr


def test_simulate_rejects_sweep_preset():
    result = runner.invoke(app, ["simulate", "--preset", "fig4", "--seed", "1", "--reps", "2"])
    assert result.exit_code == 1


def test_simulate_config_file(tmp_path, few_replications):
    config = tmp_path / "cell.yaml"
    config.write_text(
        "cells:\n  - {n: 100, level_c: 1.82, b_mode: fixed, bandwidth: 0.2, reps: 3}\n", encoding="utf-8"
    )
    output = tmp_path / "level.csv"
    result = runner.invoke(app, ["simulate", "--config", str(config), "--seed", "8", "--output", str(output)])
    assert result.exit_code == 0
    frame = pd.read_csv(output)
    assert len(frame) == 1
    assert frame["reps"].iloc[0] == 3
    assert frame["seed"].iloc[0] == 8


def test_simulate_csv_independent_of_worker_count(tmp_path, few_replications, monkeypatch):
    config = tmp_path / "cells.yaml"
    config.write_text(
        "cells:\n"
        "  - {n: 100, level_c: 1.82, b_mode: fixed, bandwidth: 0.2, reps: 6}\n"
        "  - {n: 100, level_c: 1.672, mean: {name: b}, error: {name: II}, reps: 6}\n",
        encoding="utf-8",
    )
    outputs = []
    for workers in (1, 4):
        monkeypatch.setattr(settings, "max_workers", workers)
        result = runner.invoke(app, ["simulate", "--config", str(config), "--seed", "12"])
        assert result.exit_code == 0
        outputs.append(result.stdout)
    assert outputs[0] == outputs[1]
    assert len(pd.read_csv(io.StringIO(outputs[0]))) == 2


def test_power_config_file(tmp_path, few_replications):
    config = tmp_path / "sweep.yaml"
    config.write_text(
        "base: {n: 100, level_c: 1.82, b_mode: fixed, bandwidth: 0.2, reps: 2}\n"
        "parameter: delta\n"
        "values: [0.1, 0.5]\n",
        encoding="utf-8",
    )
    result = runner.invoke(app, ["power", "--config", str(config), "--seed", "3"])
    assert result.exit_code == 0
    frame = pd.read_csv(io.StringIO(result.stdout))
    assert list(frame["value"]) == [0.1, 0.5]
    assert set(frame["parameter"]) == {"delta"}
