import numpy as np
import pytest

from masked_consensus.common.errors import MaskBookError
from masked_consensus.services.experiments import (
    DEFAULT_AMPLITUDES,
    SweepPoint,
    attack_run,
    check_amplitudes,
    indistinguishability_check,
    is_nondecreasing,
    privacy_sweep,
)
from masked_consensus.services.scenario import build_scenario
from masked_consensus.services.signals import ReferenceBank, ReferenceSpec, antisymmetric_pair
from masked_consensus.utils.config import load_config

from .conftest import CONFIGS_DIR


def load_scenario(name, *overrides):
    return build_scenario(load_config(CONFIGS_DIR / name, overrides))


@pytest.fixture(scope="module")
def dac_scenario():
    return load_scenario("dac_sinusoids.toml", "dac.horizon=5", "output.decimate=1")


@pytest.fixture(scope="module")
def fleet_scenario():
    return load_scenario("six_unit_ring.toml", "dac.horizon=5")


class TestAttackRun:
    def test_dac_attack_without_mask_recovers_inputs(self, dac_scenario):
        outcome = attack_run(dac_scenario, dac_scenario.book.with_amplitude(0.0))
        window = outcome.result.times >= outcome.cutoff
        scale = np.sqrt(np.mean(outcome.true_input[window] ** 2, axis=0))
        assert outcome.kind == "dac"
        assert outcome.amplitude == 0.0
        assert np.all(outcome.rmse / scale <= 0.01)

    def test_dac_attack_with_mask_fails(self, dac_scenario):
        plain = attack_run(dac_scenario, dac_scenario.book.with_amplitude(0.0))
        masked = attack_run(dac_scenario)
        assert masked.rmse_mean >= 10 * plain.rmse_mean
        assert masked.rmse_max >= masked.rmse_mean

    def test_runs_at_full_rate_regardless_of_output_stride(self):
        scenario = load_scenario("dac_sinusoids.toml", "dac.horizon=2")
        assert scenario.stride == 10
        outcome = attack_run(scenario)
        assert len(outcome.trajectory) == 2001
        assert len(outcome.result.times) == 2000

    def test_decimated_interception(self):
        scenario = load_scenario("dac_sinusoids.toml", "dac.horizon=2", "adversary.decimation=5")
        outcome = attack_run(scenario)
        assert len(outcome.result.times) == 400
        assert outcome.result.times[1] == pytest.approx(5e-3)
        assert outcome.true_input.shape == (400, 6)

    def test_series_layout(self, dac_scenario):
        series = attack_run(dac_scenario).series()
        for prefix in ("ztrue", "zrec", "zdotrec"):
            assert series.agent_count(prefix) == 6
        assert series.agent_count("ptrue") == 0
        assert series.dt == pytest.approx(1e-3)

    def test_fleet_attack_targets_power(self, fleet_scenario):
        plain = attack_run(fleet_scenario, fleet_scenario.book.with_amplitude(0.0))
        masked = attack_run(fleet_scenario)
        assert plain.kind == masked.kind == "bess"
        assert masked.rmse_mean >= 10 * plain.rmse_mean
        series = masked.series()
        assert series.agent_count("ptrue") == series.agent_count("prec") == 6
        np.testing.assert_allclose(
            masked.true_reference[0], fleet_scenario.fleet.unit_states(fleet_scenario.fleet.initial_soc)
        )


class TestPrivacySweep:
    def test_default_amplitudes(self):
        assert DEFAULT_AMPLITUDES == (0.0, 100.0, 250.0, 500.0, 1000.0)

    def test_rmse_grows_with_amplitude(self, dac_scenario):
        points = privacy_sweep(dac_scenario, DEFAULT_AMPLITUDES, workers=2)
        assert [p.amplitude for p in points] == list(DEFAULT_AMPLITUDES)
        assert is_nondecreasing(points)
        by_amplitude = {p.amplitude: p.rmse_mean for p in points}
        assert by_amplitude[1000.0] / by_amplitude[500.0] == pytest.approx(2.0, rel=0.2)
        assert len(points[0].per_agent) == 6

    def test_fleet_rmse_grows_with_amplitude(self, fleet_scenario):
        points = privacy_sweep(fleet_scenario, DEFAULT_AMPLITUDES, workers=2)
        assert [p.amplitude for p in points] == list(DEFAULT_AMPLITUDES)
        assert is_nondecreasing(points)
        by_amplitude = {p.amplitude: p.rmse_mean for p in points}
        assert by_amplitude[100.0] >= 10 * by_amplitude[0.0]
        assert by_amplitude[1000.0] / by_amplitude[500.0] == pytest.approx(2.0, rel=0.2)

    def test_worker_count_does_not_change_results(self, dac_scenario):
        serial = privacy_sweep(dac_scenario, (0.0, 500.0), workers=1)
        parallel = privacy_sweep(dac_scenario, (0.0, 500.0), workers=2)
        assert serial == parallel

    @pytest.mark.parametrize("amplitudes", [(), (500.0, 100.0), (-1.0, 0.0)])
    def test_rejects_bad_amplitudes(self, amplitudes):
        with pytest.raises(MaskBookError):
            check_amplitudes(amplitudes)

    def test_nondecreasing(self):
        rising = [SweepPoint(a, r, r, ()) for a, r in [(0, 0.1), (1, 0.1), (2, 0.5)]]
        assert is_nondecreasing(rising)
        assert not is_nondecreasing(list(reversed(rising)))


class TestIndistinguishability:
    @pytest.fixture(scope="class")
    def scenario(self):
        return load_scenario("dac_sinusoids.toml", "dac.horizon=10", "output.decimate=1")

    def test_shifted_secrets_leak_identically(self, scenario):
        delta = antisymmetric_pair(6, 0, 1, 100.0, 2.0)
        result = indistinguishability_check(scenario, delta)
        assert result.indistinguishable()
        assert result.residual_gap_error <= 0.02
        assert np.abs(result.delta).max() == pytest.approx(100.0, rel=1e-3)

    def test_zero_perturbation_is_identical(self, scenario):
        result = indistinguishability_check(scenario, antisymmetric_pair(6, 2, 3, 0.0, 1.0))
        assert result.max_deviation == 0.0
        assert result.indistinguishable()

    def test_rejects_perturbation_that_does_not_sum_to_zero(self, scenario):
        lopsided = ReferenceBank(
            (ReferenceSpec(terms=((10.0, 1.0),)),) + tuple(ReferenceSpec() for _ in range(5))
        )
        with pytest.raises(MaskBookError):
            indistinguishability_check(scenario, lopsided)
