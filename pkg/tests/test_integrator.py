import numpy as np
import pytest

from masked_consensus.common.errors import DivergenceError, ParameterError, UnstableStepError
from masked_consensus.services.integrator import (
    RK4_STABILITY_MARGIN,
    check_step_size,
    integrate,
    rk4_step,
    step_count,
)


def decay(rate):
    return lambda t, y: -rate * y


class TestCheckStepSize:
    def test_accepts_below_limit(self):
        check_step_size(1e-3, 400 * 4.0)

    def test_rejects_at_limit(self):
        with pytest.raises(UnstableStepError, match="too large"):
            check_step_size(RK4_STABILITY_MARGIN / 1600.0, 1600.0)

    @pytest.mark.parametrize("dt", [0.0, -1e-3])
    def test_rejects_nonpositive(self, dt):
        with pytest.raises(UnstableStepError):
            check_step_size(dt, 1.0)

    def test_zero_rate_has_no_limit(self):
        check_step_size(10.0, 0.0)


def test_step_count():
    assert step_count(1e-3, 20.0) == 20000
    with pytest.raises(ParameterError, match="shorter than one step"):
        step_count(1e-3, 5e-4)


def test_single_step_is_fourth_order():
    # one RK4 step of y' = -y reproduces the degree-4 Taylor polynomial
    dt = 0.1
    y = rk4_step(decay(1.0), 0.0, np.array([1.0]), dt)
    taylor = 1 - dt + dt**2 / 2 - dt**3 / 6 + dt**4 / 24
    assert y[0] == pytest.approx(taylor, rel=1e-14)


def test_exponential_decay_accuracy():
    times, states = integrate(decay(2.0), np.array([1.0, -3.0]), 1e-3, 1000)
    np.testing.assert_allclose(states[-1], np.exp(-2.0) * np.array([1.0, -3.0]), rtol=1e-11)
    assert times[-1] == pytest.approx(1.0)


def test_time_dependent_right_hand_side():
    times, states = integrate(lambda t, y: np.array([np.cos(t)]), np.zeros(1), 1e-2, 500)
    np.testing.assert_allclose(states[:, 0], np.sin(times), atol=1e-9)


def test_stride_keeps_initial_and_every_kth():
    full_t, full = integrate(decay(1.0), np.ones(1), 1e-2, 100)
    kept_t, kept = integrate(decay(1.0), np.ones(1), 1e-2, 100, stride=10)
    assert len(kept_t) == 11
    np.testing.assert_array_equal(kept_t, full_t[::10])
    np.testing.assert_array_equal(kept, full[::10])


def test_times_come_from_step_index():
    times, _ = integrate(decay(0.0), np.zeros(1), 0.1, 1000, t0=2.0)
    np.testing.assert_array_equal(times, 2.0 + np.arange(1001) * 0.1)


def test_bad_stride():
    with pytest.raises(ParameterError):
        integrate(decay(1.0), np.ones(1), 0.1, 10, stride=0)


def test_divergence_is_reported():
    with pytest.raises(DivergenceError, match="non-finite"):
        integrate(lambda t, y: y * y, np.array([1e200]), 1.0, 5)


def test_check_hook_sees_every_step():
    seen = []
    integrate(decay(1.0), np.ones(1), 0.25, 4, check=lambda t, y: seen.append(t))
    assert seen == [0.25, 0.5, 0.75, 1.0]
