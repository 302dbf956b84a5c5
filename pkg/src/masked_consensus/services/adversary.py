"""External eavesdropper: reconstruction attack on intercepted estimates.

The attacker sees the topology, the gain and every transmitted estimate, and
nothing else. Functions here take an ``EavesdropperView`` and plain arrays;
its imports never reach the mask or reference modules.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..common.errors import DimensionError, EmptyWindowError
from .graph import Topology, fiedler_value
from .trajectory import Trajectory, per_agent

OBSERVED = "obs"


@dataclass(frozen=True)
class EavesdropperView:
    """Everything in the observed information set: ``A``, ``beta`` and estimates."""

    topo: Topology
    beta: float
    samples: Trajectory

    def __post_init__(self) -> None:
        if set(self.samples.names) != {f"{OBSERVED}_{k}" for k in range(1, self.topo.n + 1)}:
            raise DimensionError("view must hold exactly one observed series per agent")

    @classmethod
    def intercept(
        cls,
        trajectory: Trajectory,
        topo: Topology,
        beta: float,
        prefix: str = "zhat",
        decimation: int = 1,
    ) -> "EavesdropperView":
        """Copy only the transmitted ``<prefix>_i`` series out of a run.

        ``decimation`` keeps every k-th sample, modelling coarser interception.
        """
        observed = trajectory.columns(prefix)
        if observed.shape[1] != topo.n:
            raise DimensionError(f"trajectory has {observed.shape[1]} agents, topology {topo.n}")
        copied = Trajectory(trajectory.dt, per_agent(OBSERVED, observed.copy()), trajectory.t0)
        if decimation > 1:
            copied = copied.decimate(decimation)
        return cls(topo, float(beta), copied)

    @property
    def dt(self) -> float:
        return self.samples.dt

    @property
    def estimates(self) -> np.ndarray:
        return self.samples.columns(OBSERVED)


@dataclass
class AttackResult:
    """Reconstructions aligned to ``times`` (the first K-1 observation times)."""

    times: np.ndarray
    zdot_rec: np.ndarray
    z_rec: np.ndarray
    rmse: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        if not (len(self.times) == len(self.zdot_rec) == len(self.z_rec)):
            raise DimensionError("attack series lengths differ")


def reconstruct_input_derivative(view: EavesdropperView) -> np.ndarray:
    """Invert the estimator update with a forward difference.

    ``(zhat(t_{k+1}) - zhat(t_k)) / dt + beta L zhat(t_k)``, shape ``(K-1, n)``.
    Against a masked run this recovers ``zdot + mdot``, not ``zdot``.
    """
    zhat = view.estimates
    if len(zhat) < 2:
        raise DimensionError("need at least two observed samples")
    return np.diff(zhat, axis=0) / view.dt + view.beta * (zhat[:-1] @ view.topo.laplacian)


def reconstruct_reference(view: EavesdropperView, zdot_rec: Optional[np.ndarray] = None) -> np.ndarray:
    """Trapezoidal integral of the recovered input, started from ``zhat(0)``."""
    if zdot_rec is None:
        zdot_rec = reconstruct_input_derivative(view)
    increments = 0.5 * view.dt * (zdot_rec[1:] + zdot_rec[:-1])
    start = view.estimates[0]
    return np.vstack([start, start + np.cumsum(increments, axis=0)])


def attack(view: EavesdropperView) -> AttackResult:
    """Recover the input derivative and the reference from intercepted estimates."""
    zdot_rec = reconstruct_input_derivative(view)
    z_rec = reconstruct_reference(view, zdot_rec)
    return AttackResult(view.samples.times[:-1], zdot_rec, z_rec)


def reconstruct_power(view: EavesdropperView, discharging: bool = True) -> np.ndarray:
    """Per-unit power from intercepted unit-state estimates.

    Discharging units satisfy ``xdot = -p``, charging units ``xdot = p``; the
    operating mode is public.
    """
    xdot_rec = reconstruct_input_derivative(view)
    return -xdot_rec if discharging else xdot_rec


def default_cutoff(topo: Topology, beta: float) -> float:
    """``max(1 s, 10 / (beta * lambda2))``."""
    lambda2 = fiedler_value(topo)
    return max(1.0, 10.0 / (beta * lambda2)) if lambda2 > 0 else 1.0


def privacy_rmse(
    true_series: np.ndarray,
    rec_series: np.ndarray,
    transient_cutoff: float,
    times: np.ndarray,
) -> np.ndarray:
    """RMS of ``rec - true`` over samples with ``t >= transient_cutoff``.

    One value per column for 2-D input, a 0-d array for 1-D input.
    """
    true_series = np.asarray(true_series, dtype=float)
    rec_series = np.asarray(rec_series, dtype=float)
    if true_series.shape != rec_series.shape or len(times) != len(true_series):
        raise DimensionError(
            f"shapes differ: true {true_series.shape}, rec {rec_series.shape}, times {len(times)}"
        )
    window = np.asarray(times) >= transient_cutoff
    if not window.any():
        raise EmptyWindowError(f"no samples after cutoff {transient_cutoff:g} s")
    diff = rec_series[window] - true_series[window]
    return np.sqrt(np.mean(diff**2, axis=0))


def score(
    result: AttackResult,
    truth: np.ndarray,
    transient_cutoff: float,
    recovered: Optional[np.ndarray] = None,
) -> AttackResult:
    """Attach per-agent RMSE of ``recovered`` against ``truth`` (shape ``(K-1, n)``).

    ``recovered`` defaults to ``zdot_rec``; fleet attacks pass the recovered
    unit powers instead.
    """
    if recovered is None:
        recovered = result.zdot_rec
    result.rmse = privacy_rmse(truth, recovered, transient_cutoff, result.times)
    return result
