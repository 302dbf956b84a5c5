"""Dynamic average consensus: conventional and masked estimators.

Both variants integrate ``zhat' = u(t) - beta L zhat`` where the input is
``u = zdot`` without masking and ``u = zdot + mdot`` with it. The Laplacian is
the same object in both cases.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from ..common.errors import DecayWindowError, DimensionError, EmptyWindowError, ParameterError
from ..utils.logging import get_logger
from .graph import Topology, fiedler_value, largest_eigenvalue
from .integrator import check_step_size, integrate, step_count
from .masking import MaskSource, mask_derivative_vector, mask_vector
from .signals import ReferenceBank
from .trajectory import Trajectory, per_agent

logger = get_logger(__name__)

STEADY_STATE_FACTOR = 10.0
DECAY_WINDOW_FACTOR = 5.0


@dataclass(frozen=True)
class DacParams:
    beta: float = 400.0

    def __post_init__(self) -> None:
        if not self.beta > 0:
            raise ParameterError(f"beta must be > 0, got {self.beta}")


@dataclass
class DacState:
    zhat: np.ndarray
    t: float = 0.0


def dac_rhs(
    topo: Topology, params: DacParams, zdot_input: np.ndarray, state: DacState
) -> np.ndarray:
    """``zdot_input - beta L zhat``."""
    zdot_input = np.asarray(zdot_input, dtype=float)
    if zdot_input.shape != (topo.n,) or state.zhat.shape != (topo.n,):
        raise DimensionError(
            f"expected vectors of length {topo.n}, got {zdot_input.shape} and {state.zhat.shape}"
        )
    return zdot_input - params.beta * (topo.laplacian @ state.zhat)


def init_state(
    references: ReferenceBank, book: Optional[MaskSource], topo: Topology
) -> DacState:
    """``zhat(0) = z(0) + m(0)``; the mask term is zero without a book."""
    references.check_size(topo.n)
    zhat = references.values(0.0) + mask_vector(book, topo, 0.0)
    return DacState(zhat=np.asarray(zhat, dtype=float), t=0.0)


def stability_rate(topo: Topology, params: DacParams) -> float:
    """Fastest mode of the estimator, ``beta * lambda_max``."""
    return params.beta * largest_eigenvalue(topo)


def integrate_dac(
    topo: Topology,
    params: DacParams,
    references: ReferenceBank,
    book: Optional[MaskSource],
    dt: float = 1e-3,
    horizon: float = 20.0,
    stride: int = 1,
) -> Trajectory:
    """Run the estimator with RK4 and closed-form inputs at stage times.

    The trajectory carries ``zhat_i``, ``true_average`` and ``err_i``.
    """
    references.check_size(topo.n)
    check_step_size(dt, stability_rate(topo, params), "beta*L")
    steps = step_count(dt, horizon)
    lap = topo.laplacian
    beta = params.beta

    def rhs(t: float, zhat: np.ndarray) -> np.ndarray:
        u = references.derivatives(t) + mask_derivative_vector(book, topo, t)
        return u - beta * (lap @ zhat)

    state = init_state(references, book, topo)
    times, states = integrate(rhs, state.zhat, dt, steps, stride=stride)
    average = references.values(times).mean(axis=1)
    series = per_agent("zhat", states)
    series["true_average"] = average
    series.update(per_agent("err", states - average[:, None]))
    logger.info(
        f"DAC run: n={topo.n} beta={beta:g} dt={dt:g} horizon={horizon:g} masked={book is not None}"
    )
    return Trajectory(
        dt * stride,
        series,
        meta={
            "beta": beta,
            "lambda2": fiedler_value(topo),
            "lambda_max": largest_eigenvalue(topo),
            "n": float(topo.n),
            "step_dt": dt,
        },
    )


def conservation_gap(
    trajectory: Trajectory,
    references: ReferenceBank,
    book: Optional[MaskSource],
    topo: Topology,
) -> np.ndarray:
    """``1'zhat(t) - 1'z_m(t)`` per sample; zero for exact arithmetic."""
    times = trajectory.times
    masked = references.values(times) + mask_vector(book, topo, times)
    return trajectory.columns("zhat").sum(axis=1) - masked.sum(axis=1)


def error_bound(gamma: float, params: DacParams, lambda2: float) -> float:
    """Steady-state tracking bound ``gamma / (beta * lambda2)``."""
    if gamma < 0 or not lambda2 > 0:
        raise ParameterError(f"need gamma >= 0 and lambda2 > 0, got {gamma}, {lambda2}")
    return gamma / (params.beta * lambda2)


def estimate_gamma(
    references: ReferenceBank,
    book: Optional[MaskSource],
    topo: Topology,
    horizon: float,
    dt: float,
) -> float:
    """Sampled sup of ``||(I - 11'/n)(zdot + mdot)||`` over ``[0, horizon]``."""
    references.check_size(topo.n)
    periods: List[float] = [2 * np.pi / w for w in references.frequencies()]
    omega_min = getattr(book, "omega_min", 0.0)
    if omega_min:
        periods.append(2 * np.pi / omega_min)
    if periods and horizon < max(periods):
        logger.warning(
            f"gamma horizon {horizon:.3g} s shorter than the slowest period {max(periods):.3g} s"
        )
    grid = np.arange(int(np.floor(horizon / dt)) + 1) * dt
    u = references.derivatives(grid) + mask_derivative_vector(book, topo, grid)
    projected = u - u.mean(axis=1, keepdims=True)
    return float(np.linalg.norm(projected, axis=1).max())


def steady_state_start(trajectory: Trajectory) -> float:
    """Time after which estimation errors count as steady state."""
    meta = trajectory.meta
    return trajectory.t0 + STEADY_STATE_FACTOR / (meta["beta"] * meta["lambda2"])


def steady_state_error(trajectory: Trajectory, start: Optional[float] = None) -> float:
    """Max over agents and samples after ``start`` of ``|zhat_i - average|``."""
    start = steady_state_start(trajectory) if start is None else start
    mask = trajectory.after(start)
    if not mask.any():
        raise EmptyWindowError(f"no samples after t={start:.6g}")
    return float(np.abs(trajectory.columns("err")[mask]).max())


def disagreement(trajectory: Trajectory, prefix: str = "zhat") -> np.ndarray:
    """``||(I - 11'/n) zhat(t)||`` per sample."""
    values = trajectory.columns(prefix)
    return np.linalg.norm(values - values.mean(axis=1, keepdims=True), axis=1)


def measure_decay_rate(trajectory: Trajectory, window: Optional[float] = None) -> float:
    """Least-squares decay rate of the disagreement norm over the first window.

    The default window is ``5 / (beta * lambda2)`` from the trajectory metadata.
    """
    if window is None:
        window = DECAY_WINDOW_FACTOR / (trajectory.meta["beta"] * trajectory.meta["lambda2"])
    times = trajectory.times - trajectory.t0
    if times[-1] < window * (1 - 1e-9):
        raise DecayWindowError(
            f"window {window:.6g} s exceeds trajectory length {times[-1]:.6g} s"
        )
    norms = disagreement(trajectory)
    scale = max(1.0, float(np.abs(trajectory.columns("zhat")).max()))
    if norms[0] <= 1e-12 * scale:
        raise DecayWindowError("initial disagreement is already at the numerical floor")
    in_window = (times <= window * (1 + 1e-9)) & (norms > 1e-13 * norms[0])
    if in_window.sum() < 3:
        raise DecayWindowError("fewer than three usable samples in the decay window")
    slope, _ = np.polyfit(times[in_window], np.log(norms[in_window]), 1)
    return float(-slope)


def min_beta_for_guard(gamma_s: float, a1: float, lambda2: float) -> float:
    """Gain that keeps the unit-state estimate above ``a1/2`` after the transient."""
    if not (a1 > 0 and lambda2 > 0):
        raise ParameterError(f"need a1 > 0 and lambda2 > 0, got {a1}, {lambda2}")
    return 2.0 * gamma_s / (a1 * lambda2)
