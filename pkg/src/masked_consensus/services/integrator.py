"""Fixed-step classical Runge-Kutta integration."""

from __future__ import annotations

from typing import Callable, Optional, Tuple

import numpy as np

from ..common.errors import DivergenceError, ParameterError, UnstableStepError
from ..utils.logging import get_logger

logger = get_logger(__name__)

RHS = Callable[[float, np.ndarray], np.ndarray]
StepCheck = Callable[[float, np.ndarray], None]

# Real-axis stability interval of classical RK4 is about 2.785; 2.5 leaves margin.
RK4_STABILITY_MARGIN = 2.5


def check_step_size(dt: float, rate: float, label: str = "dynamics") -> None:
    """Reject ``dt`` unless ``dt * rate < 2.5`` for the fastest decay ``rate``."""
    if not dt > 0:
        raise UnstableStepError(f"step size must be > 0, got {dt}")
    if rate > 0 and dt >= RK4_STABILITY_MARGIN / rate:
        raise UnstableStepError(
            f"dt={dt:g} too large for {label}: need dt < {RK4_STABILITY_MARGIN / rate:.6g} "
            f"(fastest rate {rate:.6g} 1/s)"
        )


def step_count(dt: float, horizon: float) -> int:
    """Number of steps covering ``horizon``; the horizon must hold at least one step."""
    if not dt > 0:
        raise UnstableStepError(f"step size must be > 0, got {dt}")
    if horizon < dt:
        raise ParameterError(f"horizon {horizon:g} s is shorter than one step dt={dt:g} s")
    return int(round(horizon / dt))


def rk4_step(fun: RHS, t: float, y: np.ndarray, dt: float) -> np.ndarray:
    """One classical fourth-order Runge-Kutta step."""
    k1 = fun(t, y)
    k2 = fun(t + dt / 2, y + 0.5 * dt * k1)
    k3 = fun(t + dt / 2, y + 0.5 * dt * k2)
    k4 = fun(t + dt, y + dt * k3)
    return y + (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate(
    fun: RHS,
    y0: np.ndarray,
    dt: float,
    steps: int,
    t0: float = 0.0,
    stride: int = 1,
    check: Optional[StepCheck] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """Integrate ``steps`` RK4 steps and keep every ``stride``-th state.

    Returns ``(times, states)`` with ``states[k]`` the state at ``times[k]``;
    the initial state is always kept. Times are ``t0 + step * dt`` computed
    from the step index, never accumulated.
    """
    if stride < 1:
        raise ParameterError(f"stride must be >= 1, got {stride}")
    y = np.array(y0, dtype=float)
    kept = steps // stride + 1
    times = np.empty(kept)
    states = np.empty((kept, y.size))
    times[0], states[0] = t0, y
    row = 1
    for step in range(steps):
        t = t0 + step * dt
        y = rk4_step(fun, t, y, dt)
        if not np.all(np.isfinite(y)):
            raise DivergenceError(f"non-finite state at t={t + dt:.6g}")
        if check is not None:
            check(t + dt, y)
        if (step + 1) % stride == 0:
            times[row] = t0 + (step + 1) * dt
            states[row] = y
            row += 1
    logger.debug(f"integrated {steps} steps (dt={dt:g}), kept {kept} samples")
    return times, states
