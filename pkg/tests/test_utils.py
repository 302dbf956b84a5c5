import logging

import numpy as np
import pytest

from masked_consensus.common.errors import (
    ConfigError,
    DimensionError,
    MaskBookError,
    NumericalError,
    ParameterError,
    SocRangeError,
    TopologyError,
    UnstableStepError,
)
from masked_consensus.services.trajectory import Trajectory, per_agent
from masked_consensus.utils.logging import ROOT_LOGGER, get_logger, setup_logging
from masked_consensus.utils.paths import (
    OUT_DIR_ENV,
    default_output_dir,
    find_configs_dir,
    run_directory,
    slugify,
)

from .conftest import CONFIGS_DIR


class TestErrors:
    @pytest.mark.parametrize("error", [ConfigError, TopologyError, MaskBookError, DimensionError])
    def test_configuration_errors_exit_two(self, error):
        assert error("x").exit_code == 2

    @pytest.mark.parametrize("error", [NumericalError, UnstableStepError, SocRangeError])
    def test_numerical_errors_exit_three(self, error):
        assert error("x").exit_code == 3

    def test_input_errors_are_value_errors(self):
        assert issubclass(TopologyError, ValueError)
        assert not issubclass(ConfigError, ValueError)

    def test_parameter_errors_exit_two(self):
        assert ParameterError("x").exit_code == 2
        assert issubclass(ParameterError, ValueError)


class TestPaths:
    def test_slugify(self):
        assert slugify("Six Unit Ring!") == "six-unit-ring"
        assert slugify("simulate_dac") == "simulate-dac"

    def test_run_directory(self, tmp_path):
        path = run_directory(tmp_path, "privacy-sweep", "My Scenario")
        assert path == tmp_path / "my-scenario" / "privacy-sweep"
        assert path.is_dir()

    def test_default_output_dir(self, monkeypatch, tmp_path):
        monkeypatch.delenv(OUT_DIR_ENV, raising=False)
        assert str(default_output_dir()) == "runs"
        monkeypatch.setenv(OUT_DIR_ENV, str(tmp_path))
        assert default_output_dir() == tmp_path

    def test_find_configs_dir(self):
        assert find_configs_dir() == CONFIGS_DIR


class TestLogging:
    def test_namespaced_loggers(self):
        assert get_logger().name == ROOT_LOGGER
        assert get_logger("masked_consensus.services.dac").name == "masked_consensus.services.dac"
        assert get_logger("runner").name == "masked_consensus.runner"

    def test_setup_replaces_handlers(self, tmp_path):
        log_file = tmp_path / "logs" / "run.log"
        setup_logging("DEBUG", log_file=log_file)
        logger = setup_logging("WARNING", log_file=log_file, log_to_console=False)
        assert len(logger.handlers) == 1
        assert logger.level == logging.WARNING
        assert not logger.propagate
        get_logger("sampler").warning("sampled 7")
        logger.handlers[0].flush()
        assert "masked_consensus.sampler - WARNING - sampled 7" in log_file.read_text()
        setup_logging("INFO", log_to_console=False)

    @pytest.mark.parametrize("level", ["VERBOSE", "loud", ""])
    def test_unknown_level(self, level):
        with pytest.raises(ConfigError, match="unknown log level"):
            setup_logging(level, log_to_console=False)

    def test_lowercase_level(self):
        logger = setup_logging("debug", log_to_console=False)
        assert logger.level == logging.DEBUG
        setup_logging("INFO", log_to_console=False)


class TestTrajectory:
    def test_columns_and_times(self):
        traj = Trajectory(0.5, per_agent("z", np.arange(6.0).reshape(3, 2)), t0=1.0)
        np.testing.assert_array_equal(traj.times, [1.0, 1.5, 2.0])
        np.testing.assert_array_equal(traj.columns("z"), np.arange(6.0).reshape(3, 2))
        assert traj.agent_count("z") == 2
        assert traj.names == ["z_1", "z_2"]
        np.testing.assert_array_equal(traj.after(1.5), [False, True, True])

    def test_decimate(self):
        traj = Trajectory(0.1, {"a": np.arange(10.0)})
        thinned = traj.decimate(3)
        assert thinned.dt == pytest.approx(0.3)
        np.testing.assert_array_equal(thinned.series["a"], [0, 3, 6, 9])
        with pytest.raises(ValueError):
            traj.decimate(0)

    def test_lengths_must_agree(self):
        with pytest.raises(DimensionError):
            Trajectory(1.0, {"a": np.zeros(2), "b": np.zeros(3)})

    def test_unknown_prefix(self):
        with pytest.raises(KeyError):
            Trajectory(1.0, {"a": np.zeros(2)}).columns("z")
