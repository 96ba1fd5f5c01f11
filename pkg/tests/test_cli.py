import json
from pathlib import Path

import numpy as np
import pytest

from flsgd.cli import EXIT_DATA, EXIT_FAIL, EXIT_OK, EXIT_USAGE, main
from flsgd.grid import DiscreteFunction, build_grid
from flsgd.harness.io import export_curves

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
SMOKE = str(CONFIGS / "smoke_kernels.toml")


def test_usage_errors(capsys):
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == EXIT_USAGE
    with pytest.raises(SystemExit) as exc:
        main(["rates"])
    assert exc.value.code == EXIT_USAGE


def test_bad_config_exits_1(tmp_path):
    p = tmp_path / "bad.toml"
    p.write_text("[nope]\n")
    assert main(["schedule", "--config", str(p)]) == EXIT_USAGE
    assert main(["schedule", "--config", SMOKE, "--jobs", "0"]) == EXIT_USAGE
    assert main(["schedule", "--config", SMOKE, "--seed", "-1"]) == EXIT_USAGE


def test_schedule_json(capsys):
    assert main(["schedule", "--config", SMOKE]) == EXIT_OK
    data = json.loads(capsys.readouterr().out)
    assert data["theorem"] == "T3" and len(data["schedules"]) == 4
    assert {"passes", "binding", "max_admissible"} <= set(data["schedules"][0]["admissibility"])


def test_spectrum_and_simulate(tmp_path, capsys):
    assert main(["spectrum", "--config", SMOKE, "--out", str(tmp_path)]) == EXIT_OK
    assert (tmp_path / "spectrum_TK.csv").read_text().startswith("ell,lambda_ell\n")
    assert main(["simulate", "--config", SMOKE, "--out", str(tmp_path), "--override-step-size", "0.3"]) == EXIT_OK
    assert "outside-theorem-regime" in capsys.readouterr().out
    lines = (tmp_path / "trajectory.csv").read_text().splitlines()
    assert lines[0] == "k,pred_error,est_error_K,discarded_energy" and lines[-1].startswith("513,")


def test_simulate_on_data(tmp_path):
    g = build_grid(64, "gauss-legendre")
    rng = np.random.default_rng(0)
    pairs = [(DiscreteFunction(rng.standard_normal(64), g), 0.1) for _ in range(10)]
    export_curves(tmp_path / "d.csv", pairs, g)
    assert main(["simulate", "--config", SMOKE, "--out", str(tmp_path), "--data", str(tmp_path / "d.csv")]) == 0
    assert (tmp_path / "beta.csv").exists()
    (tmp_path / "bad.csv").write_text("y,x_1\n1,2\n")
    assert main(["simulate", "--config", SMOKE, "--data", str(tmp_path / "bad.csv")]) == EXIT_DATA


def test_rates_failure_exit_code(tmp_path):
    # the smoke model is pre-asymptotic at these n, so the slope check fails honestly
    assert main(["rates", "--config", SMOKE, "--out", str(tmp_path)]) == EXIT_FAIL
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["outside_theorem_regime"] and not report["passed"]
