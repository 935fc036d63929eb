"""
Test script for the imc-hit command line
Each subcommand is driven through app.main with JSON read back from stdout
"""

import json
from pathlib import Path

import pytest
from loguru import logger
from pydantic import ValidationError

import app
from imchit.config import Settings

INSTANCE_DIR = Path(__file__).parent / "instances"


@pytest.fixture(autouse=True)
def _detach_cli_sink():
    yield
    # main() binds loguru to the captured stderr of the current test
    logger.remove()


def _run(capsys, argv):
    code = app.main(argv)
    captured = capsys.readouterr()
    return code, captured


def _ok(capsys, argv):
    code, captured = _run(capsys, argv)
    assert code == 0, captured.err
    return json.loads(captured.out)


def _failure(capsys, argv):
    code, captured = _run(capsys, argv)
    assert code == 1
    return json.loads(captured.err.strip().splitlines()[-1])


def test_fixtures_listing(capsys):
    assert _ok(capsys, ["fixtures"])["fixtures"] == ["example1", "example2", "tiebreak"]
    instance = _ok(capsys, ["fixtures", "--name", "example2"])["instance"]
    assert instance["target"] == [2]


def test_generate_then_solve(capsys, tmp_path):
    path = tmp_path / "random.json"
    result = _ok(capsys, ["gen", "--n", "8", "--lambda", "3", "--model", "hull", "--seed", "4",
                          "--out", str(path)])
    assert result["path"] == str(path)

    lower = _ok(capsys, ["solve-lower", str(path)])
    upper = _ok(capsys, ["solve-upper", str(path), "--trace"])
    assert lower["mode"] == "lower" and upper["mode"] == "upper"
    assert all(lo <= up + 1e-9 for lo, up in zip(lower["probabilities"], upper["probabilities"]))
    assert lower["probabilities"][0] == 1.0
    assert upper["probabilities"][7] == 0.0
    assert len(upper["trace"]) == upper["iterations"]


def test_generate_to_stdout(capsys):
    result = _ok(capsys, ["gen", "--family", "worst_case", "--m", "4"])
    assert result["instance"]["generator"]["params"] == {"m": 4}
    chain = _ok(capsys, ["gen", "--family", "propagation_chain", "--n", "5"])
    assert chain["states"] == 7


def test_worst_case_from_start(capsys):
    result = _ok(capsys, ["solve-upper", str(INSTANCE_DIR / "worst_case_m3.json"), "--start", "0,0,0"])
    assert result["iterations"] == 3
    assert result["probabilities"][0] == pytest.approx(8 / 9)
    assert result["selection"] == [2, 0, 0]


def test_reach_reports(capsys):
    report = _ok(capsys, ["reach", str(INSTANCE_DIR / "example1.json")])
    assert report["chain"] == [[2], [1, 2], [0, 1, 2]]
    assert report["trivial_zero"] == [3]

    cycle = _ok(capsys, ["reach", str(INSTANCE_DIR / "example2.json"), "--state", "0", "--n-cap", "10"])
    assert cycle["lr3"] is False
    assert cycle["lr2_minimal_n"] == 5
    assert cycle["target_closed"] is False


def test_oracle_on_worst_case(capsys):
    result = _ok(capsys, ["oracle", str(INSTANCE_DIR / "worst_case_m3.json"), "--trials", "2000"])
    assert result["lower"][0] == pytest.approx(2 / 3)
    assert result["upper"][0] == pytest.approx(8 / 9)
    assert result["center_simulated"][1]["estimate"] == 1.0


def test_oracle_reports_solver_agreement(capsys):
    argv = ["oracle", str(INSTANCE_DIR / "worst_case_m3.json"), "--trials", "500",
            "--tol", "1e-10", "--max-iters", "50", "--trace"]
    result = _ok(capsys, argv)
    assert result["agrees"] is True
    assert result["gap"]["lower"] <= 1e-10
    assert result["gap"]["upper"] <= 1e-10
    assert result["solver"]["upper"]["probabilities"][0] == pytest.approx(8 / 9)
    assert len(result["solver"]["lower"]["trace"]) == result["solver"]["lower"]["iterations"]


def test_oracle_rejects_bad_solver_flags(capsys):
    argv = ["oracle", str(INSTANCE_DIR / "worst_case_m3.json"), "--max-iters", "0"]
    assert _failure(capsys, argv)["error"] == "ValidationError"


def test_experiment_and_scan(capsys, tmp_path):
    out = tmp_path / "batch.csv"
    result = _ok(capsys, ["experiment", "--n", "5", "--lambda", "1,5", "--runs", "2", "--out", str(out)])
    assert [cell["lambda"] for cell in result["cells"]] == [1.0, 5.0]
    assert out.exists() and (tmp_path / "batch_histogram.csv").exists()

    peaks = _ok(capsys, ["scan", "--n-grid", "5", "--lambda", "1,5", "--runs", "2"])["peaks"]
    assert peaks == [{"N": 5, "lambda_star": 5.0, "peak_mean": 2.0}]


def test_errors_exit_with_json(capsys, tmp_path):
    missing = _failure(capsys, ["solve-upper", str(tmp_path / "nope.json")])
    assert missing["error"] == "DomainError"
    assert missing["diagnostics"]["path"].endswith("nope.json")

    assert _failure(capsys, ["gen", "--model", "interval"])["error"] == "DomainError"
    assert _failure(capsys, ["fixtures", "--name", "example9"])["error"] == "DomainError"

    rejected = _failure(capsys, ["solve-lower", str(INSTANCE_DIR / "example2.json"), "--tol", "0"])
    assert rejected["error"] == "ValidationError"

    start = _failure(capsys, ["solve-upper", str(INSTANCE_DIR / "tiebreak.json"), "--start", "0,1,0"])
    assert start["diagnostics"]["trivial_zero"] == [0]


def test_settings_from_environment(monkeypatch):
    monkeypatch.setenv("IMC_HIT_THREADS", "3")
    monkeypatch.setenv("IMC_HIT_LOG_LEVEL", "debug")
    settings = Settings.from_env()
    assert settings.threads == 3
    assert settings.log_level == "DEBUG"
    monkeypatch.setenv("IMC_HIT_LOG_LEVEL", "loud")
    with pytest.raises(ValidationError):
        Settings.from_env()
