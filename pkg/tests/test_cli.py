import csv
import json

import pytest
from typer.testing import CliRunner

from masked_consensus.cli import app
from masked_consensus.utils.config import LOG_LEVEL_ENV
from masked_consensus.utils.logging import setup_logging
from masked_consensus.utils.paths import OUT_DIR_ENV

from .conftest import CONFIGS_DIR

runner = CliRunner()

DAC = str(CONFIGS_DIR / "dac_sinusoids.toml")
FLEET = str(CONFIGS_DIR / "six_unit_ring.toml")


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    monkeypatch.delenv(OUT_DIR_ENV, raising=False)
    monkeypatch.delenv(LOG_LEVEL_ENV, raising=False)
    yield
    # drop handlers bound to this invocation's streams
    setup_logging("WARNING", log_to_console=False)


def invoke(*args):
    return runner.invoke(app, list(args))


def flat(text):
    return " ".join(text.split())


def read_metrics(run_dir):
    return json.loads((run_dir / "metrics.json").read_text(encoding="utf-8"))


def test_info():
    result = invoke("info")
    assert result.exit_code == 0
    assert "masked-consensus Info" in result.output
    assert "dac_sinusoids.toml" in result.output


class TestSimulateDac:
    def test_writes_run_directory(self, tmp_path):
        result = invoke("simulate-dac", "-c", DAC, "-o", str(tmp_path), "--set", "dac.horizon=1")
        assert result.exit_code == 0, result.output
        run_dir = tmp_path / "dac-sinusoids" / "simulate-dac"
        with open(run_dir / "dac.csv", newline="", encoding="utf-8") as f:
            rows = list(csv.reader(f))
        assert rows[0][:2] == ["t", "zhat_1"]
        assert len(rows) == 1 + 101
        metrics = read_metrics(run_dir)
        assert metrics["lambda2"] == pytest.approx(1.0)
        assert metrics["bound_satisfied"] is True
        manifest = json.loads((run_dir / "manifest.json").read_text(encoding="utf-8"))
        assert [f["name"] for f in manifest["files"]] == ["dac.csv", "metrics.json"]
        assert manifest["log"] is None
        emitted = sorted(p.relative_to(tmp_path).as_posix() for p in tmp_path.rglob("*") if p.is_file())
        assert emitted == [
            "dac-sinusoids/simulate-dac/dac.csv",
            "dac-sinusoids/simulate-dac/manifest.json",
            "dac-sinusoids/simulate-dac/metrics.json",
        ]

    def test_log_file_is_opt_in_and_declared(self, tmp_path):
        result = invoke(
            "simulate-dac", "-c", DAC, "-o", str(tmp_path),
            "--set", "dac.horizon=0.1", "--set", "output.log=true",
        )
        assert result.exit_code == 0, result.output
        run_dir = tmp_path / "dac-sinusoids" / "simulate-dac"
        manifest = json.loads((run_dir / "manifest.json").read_text(encoding="utf-8"))
        assert manifest["log"] == "masked_consensus.log"
        assert "simulate-dac: scenario" in (run_dir / "masked_consensus.log").read_text(encoding="utf-8")
        assert not (tmp_path / "logs").exists()

    def test_replay_is_byte_identical(self, tmp_path):
        args = ("simulate-dac", "-c", DAC, "-o", str(tmp_path), "--set", "dac.horizon=0.5")
        csv_path = tmp_path / "dac-sinusoids" / "simulate-dac" / "dac.csv"
        assert invoke(*args).exit_code == 0
        first = csv_path.read_bytes()
        assert invoke(*args).exit_code == 0
        assert csv_path.read_bytes() == first

    def test_wrong_scenario_kind(self, tmp_path):
        result = invoke("simulate-dac", "-c", FLEET, "-o", str(tmp_path))
        assert result.exit_code == 2
        assert "[references]" in flat(result.output)

    def test_malformed_override(self, tmp_path):
        result = invoke("simulate-dac", "-c", DAC, "-o", str(tmp_path), "--set", "dac.beta")
        assert result.exit_code == 2

    def test_missing_config(self, tmp_path):
        result = invoke("simulate-dac", "-c", str(tmp_path / "none.toml"), "-o", str(tmp_path))
        assert result.exit_code == 2
        assert "not found" in flat(result.output)

    def test_unstable_step(self, tmp_path):
        result = invoke("simulate-dac", "-c", DAC, "-o", str(tmp_path), "--set", "dac.dt=0.01")
        assert result.exit_code == 3
        assert "too large" in flat(result.output)

    def test_horizon_below_one_step(self, tmp_path):
        result = invoke("simulate-dac", "-c", DAC, "-o", str(tmp_path), "--set", "dac.horizon=0.0005")
        assert result.exit_code == 2
        assert "shorter than one step" in flat(result.output)

    @pytest.mark.parametrize("override", ["log_level=verbose", "log_level=''"])
    def test_unknown_log_level(self, tmp_path, override):
        result = invoke("simulate-dac", "-c", DAC, "-o", str(tmp_path), "--set", override)
        assert result.exit_code == 2
        assert "log_level" in flat(result.output)

    def test_unknown_log_level_from_environment(self, tmp_path, monkeypatch):
        monkeypatch.setenv(LOG_LEVEL_ENV, "chatty")
        result = invoke("simulate-dac", "-c", DAC, "-o", str(tmp_path))
        assert result.exit_code == 2

    def test_out_dir_from_environment(self, tmp_path, monkeypatch):
        monkeypatch.setenv(OUT_DIR_ENV, str(tmp_path / "env"))
        result = invoke("simulate-dac", "-c", DAC, "--set", "dac.horizon=0.1")
        assert result.exit_code == 0, result.output
        assert (tmp_path / "env" / "dac-sinusoids" / "simulate-dac" / "dac.csv").exists()


class TestSimulateBess:
    def test_short_run(self, tmp_path):
        result = invoke("simulate-bess", "-c", FLEET, "-o", str(tmp_path), "--set", "dac.horizon=1")
        assert result.exit_code == 0, result.output
        run_dir = tmp_path / "six-unit-ring" / "simulate-bess"
        header = (run_dir / "bess.csv").read_text(encoding="utf-8").splitlines()[0]
        assert header.startswith("t,soc_1,")
        assert header.endswith(",soc_spread")
        metrics = read_metrics(run_dir)
        assert metrics["mode"] == "discharge"
        assert metrics["final_soc_spread"] <= metrics["initial_soc_spread"]
        assert "tracking_error_max" not in metrics

    def test_charge_mode_override(self, tmp_path):
        result = invoke(
            "simulate-bess", "-c", FLEET, "-o", str(tmp_path),
            "--set", "bess.mode=charge", "--set", "dac.horizon=1",
        )
        assert result.exit_code == 0, result.output
        metrics = read_metrics(tmp_path / "six-unit-ring" / "simulate-bess")
        assert metrics["mode"] == "charge"

    def test_wrong_scenario_kind(self, tmp_path):
        result = invoke("simulate-bess", "-c", DAC, "-o", str(tmp_path))
        assert result.exit_code == 2


class TestAttack:
    def test_attack(self, tmp_path):
        result = invoke("attack", "-c", DAC, "-o", str(tmp_path), "--set", "dac.horizon=2")
        assert result.exit_code == 0, result.output
        run_dir = tmp_path / "dac-sinusoids" / "attack"
        header = (run_dir / "attack.csv").read_text(encoding="utf-8").splitlines()[0]
        assert header.startswith("t,ztrue_1,zrec_1,zdotrec_1")
        metrics = read_metrics(run_dir)
        assert metrics["target"] == "zdot_i"
        assert metrics["cutoff"] == 1.0
        assert len(metrics["rmse_per_agent"]) == 6

    def test_fleet_attack(self, tmp_path):
        result = invoke("attack", "-c", FLEET, "-o", str(tmp_path), "--set", "dac.horizon=2")
        assert result.exit_code == 0, result.output
        metrics = read_metrics(tmp_path / "six-unit-ring" / "attack")
        assert metrics["target"] == "p_i"

    def test_adversary_disabled(self, tmp_path):
        result = invoke(
            "attack", "-c", DAC, "-o", str(tmp_path), "--set", "adversary.enabled=false"
        )
        assert result.exit_code == 2

    def test_window_after_horizon(self, tmp_path):
        result = invoke("attack", "-c", DAC, "-o", str(tmp_path), "--set", "dac.horizon=0.5")
        assert result.exit_code == 3

    def test_privacy_sweep(self, tmp_path):
        result = invoke(
            "privacy-sweep", "-c", DAC, "-o", str(tmp_path), "-a", "0,500", "--set", "dac.horizon=2"
        )
        assert result.exit_code == 0, result.output
        run_dir = tmp_path / "dac-sinusoids" / "privacy-sweep"
        lines = (run_dir / "sweep.csv").read_text(encoding="utf-8").splitlines()
        assert lines[0] == "amplitude,rmse_mean,rmse_max"
        assert len(lines) == 3
        metrics = read_metrics(run_dir)
        assert metrics["amplitudes"] == [0.0, 500.0]
        assert metrics["nondecreasing"] is True

    @pytest.mark.parametrize("amplitudes, code", [("500,0", 2), ("a,b", 2), ("-5", 2)])
    def test_privacy_sweep_rejects_amplitudes(self, tmp_path, amplitudes, code):
        result = invoke(
            "privacy-sweep", "-c", DAC, "-o", str(tmp_path), f"--amplitudes={amplitudes}"
        )
        assert result.exit_code == code


class TestCheckBounds:
    def test_static_report(self, tmp_path):
        result = invoke(
            "check-bounds", "-c", DAC, "-o", str(tmp_path), "--no-measure", "--set", "dac.horizon=1"
        )
        assert result.exit_code == 0, result.output
        metrics = read_metrics(tmp_path / "dac-sinusoids" / "check-bounds")
        assert metrics["lambda2"] == pytest.approx(1.0)
        assert metrics["lambda_max"] == pytest.approx(4.0)
        assert metrics["dt_limit"] == pytest.approx(2.5 / 1600)
        assert metrics["dt_ok"] is True
        assert metrics["omega_range"] == [1.11, 8.15]
        assert "steady_state_error" not in metrics

    def test_measured_report(self, tmp_path):
        result = invoke("check-bounds", "-c", DAC, "-o", str(tmp_path), "--set", "dac.horizon=1")
        assert result.exit_code == 0, result.output
        metrics = read_metrics(tmp_path / "dac-sinusoids" / "check-bounds")
        assert metrics["steady_state_error"] <= metrics["error_bound"]
        assert metrics["bound_satisfied"] is True

    def test_fleet_static_report(self, tmp_path):
        result = invoke("check-bounds", "-c", FLEET, "-o", str(tmp_path), "--no-measure")
        assert result.exit_code == 0, result.output
        metrics = read_metrics(tmp_path / "six-unit-ring" / "check-bounds")
        assert metrics["power_reference_touches_zero"] is True
        assert metrics["a1"] == pytest.approx(0.05 * 180 * 3600 * 50)
        assert metrics["psi"] == pytest.approx(4200.0)

    def test_unstable_step_skips_measurement(self, tmp_path):
        result = invoke("check-bounds", "-c", DAC, "-o", str(tmp_path), "--set", "dac.dt=0.01")
        assert result.exit_code == 0, result.output
        metrics = read_metrics(tmp_path / "dac-sinusoids" / "check-bounds")
        assert metrics["dt_ok"] is False
        assert "steady_state_error" not in metrics
