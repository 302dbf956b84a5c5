"""Privacy experiments: attack runs, amplitude sweeps, indistinguishability.

This module holds the ground truth (references, masks, true powers) and
scores what the eavesdropper recovers from the transmitted estimates alone.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence

import numpy as np

from ..common.errors import MaskBookError
from ..utils.logging import get_logger
from .adversary import AttackResult, EavesdropperView, attack, reconstruct_power, score
from .bess import Mode
from .dac import integrate_dac
from .masking import MaskBook, ShiftedMask
from .scenario import DacScenario, Scenario
from .signals import ReferenceBank
from .trajectory import Trajectory, per_agent

logger = get_logger(__name__)

DEFAULT_AMPLITUDES = (0.0, 100.0, 250.0, 500.0, 1000.0)


@dataclass
class AttackOutcome:
    """One attacked run and the truth the attack is scored against.

    For DAC scenarios the scored input is ``zdot`` and the reference is ``z``.
    For fleet scenarios the scored input is the per-unit power ``p`` and the
    reference is the unit state ``x``.
    """

    kind: str
    amplitude: float
    trajectory: Trajectory
    result: AttackResult
    true_reference: np.ndarray
    true_input: np.ndarray
    recovered_input: np.ndarray
    rmse: np.ndarray
    cutoff: float

    @property
    def rmse_mean(self) -> float:
        return float(np.mean(self.rmse))

    @property
    def rmse_max(self) -> float:
        return float(np.max(self.rmse))

    def series(self) -> Trajectory:
        """Attack output as ``ztrue_i``, ``zrec_i``, ``zdotrec_i`` (plus ``ptrue_i``, ``prec_i``)."""
        result = self.result
        series: Dict[str, np.ndarray] = {}
        series.update(per_agent("ztrue", self.true_reference))
        series.update(per_agent("zrec", result.z_rec))
        series.update(per_agent("zdotrec", result.zdot_rec))
        if self.kind == "bess":
            series.update(per_agent("ptrue", self.true_input))
            series.update(per_agent("prec", self.recovered_input))
        dt = float(result.times[1] - result.times[0]) if len(result.times) > 1 else 1.0
        return Trajectory(dt, series, float(result.times[0]))


@dataclass(frozen=True)
class SweepPoint:
    amplitude: float
    rmse_mean: float
    rmse_max: float
    per_agent: Sequence[float]


@dataclass
class IndistinguishabilityResult:
    """Two executions with the same observables but different secrets."""

    max_deviation: float
    scale: float
    residual_gap_error: float
    times: np.ndarray
    residual_gap: np.ndarray
    delta: np.ndarray

    def indistinguishable(self, rtol: float = 1e-10) -> bool:
        """True when the two intercepted runs agree within ``rtol`` of their scale."""
        return self.max_deviation <= rtol * self.scale


def attack_run(scenario: Scenario, book: Optional[MaskBook] = None) -> AttackOutcome:
    """Run the scenario at full rate, intercept the estimates and score the attack.

    The simulation keeps every integration step; the attacker's own
    ``decimation`` then thins what it intercepts.
    """
    run = replace(scenario, stride=1)
    if book is not None:
        run = run.with_book(book)
    trajectory = run.run()
    cutoff = run.transient_cutoff

    if isinstance(run, DacScenario):
        view = EavesdropperView.intercept(
            trajectory, run.topo, run.dac.beta, "zhat", run.decimation
        )
        result = attack(view)
        true_reference = run.references.values(result.times)
        true_input = run.references.derivatives(result.times)
        recovered = result.zdot_rec
    else:
        view = EavesdropperView.intercept(
            trajectory, run.topo, run.dac.beta, "xhat", run.decimation
        )
        result = attack(view)
        rows = np.arange(len(result.times)) * run.decimation
        true_reference = trajectory.columns("x")[rows]
        true_input = trajectory.columns("p")[rows]
        recovered = reconstruct_power(view, discharging=run.fleet.mode is Mode.DISCHARGING)

    rmse = score(result, true_input, cutoff, recovered).rmse
    logger.info(
        f"attack on {run.kind} (A_m={run.book.amplitude:g}): "
        f"mean RMSE {float(np.mean(rmse)):.6g}, max {float(np.max(rmse)):.6g}"
    )
    return AttackOutcome(
        kind=run.kind,
        amplitude=run.book.amplitude,
        trajectory=trajectory,
        result=result,
        true_reference=true_reference,
        true_input=true_input,
        recovered_input=recovered,
        rmse=rmse,
        cutoff=cutoff,
    )


def check_amplitudes(amplitudes: Sequence[float]) -> List[float]:
    """Validate a sweep: non-empty, non-negative and ascending."""
    values = [float(a) for a in amplitudes]
    if not values:
        raise MaskBookError("need at least one amplitude")
    if any(a < 0 for a in values):
        raise MaskBookError(f"amplitudes must be >= 0, got {values}")
    if values != sorted(values):
        raise MaskBookError(f"amplitudes must be sorted ascending, got {values}")
    return values


def privacy_sweep(
    scenario: Scenario,
    amplitudes: Sequence[float] = DEFAULT_AMPLITUDES,
    workers: Optional[int] = None,
) -> List[SweepPoint]:
    """One attack run per amplitude, same frequencies, fanned out over threads."""
    values = check_amplitudes(amplitudes)
    max_workers = workers or min(len(values), os.cpu_count() or 1)

    def one(amplitude: float) -> SweepPoint:
        outcome = attack_run(scenario, scenario.book.with_amplitude(amplitude))
        return SweepPoint(
            amplitude, outcome.rmse_mean, outcome.rmse_max, tuple(outcome.rmse.tolist())
        )

    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        points = list(pool.map(one, values))
    logger.info(f"privacy sweep over {len(values)} amplitudes with {max_workers} workers")
    return points


def is_nondecreasing(points: Sequence[SweepPoint]) -> bool:
    """True when the mean RMSE never falls as the amplitude grows."""
    means = [p.rmse_mean for p in points]
    return all(b >= a for a, b in zip(means, means[1:]))


def indistinguishability_check(
    scenario: DacScenario, delta: ReferenceBank
) -> IndistinguishabilityResult:
    """Run ``(z, m)`` and ``(z + delta, m - delta)`` and compare what leaks.

    ``delta`` must sum to zero across agents and vanish at t = 0, otherwise
    the shifted mask is rejected. Both runs use the same integrator steps.
    """
    delta.check_size(scenario.topo.n)
    shifted_mask = ShiftedMask(scenario.book, delta)
    shifted_refs = scenario.references + delta

    first = integrate_dac(
        scenario.topo, scenario.dac, scenario.references, scenario.book,
        dt=scenario.dt, horizon=scenario.horizon,
    )
    second = integrate_dac(
        scenario.topo, scenario.dac, shifted_refs, shifted_mask,
        dt=scenario.dt, horizon=scenario.horizon,
    )
    zhat_a, zhat_b = first.columns("zhat"), second.columns("zhat")
    deviation = float(np.abs(zhat_a - zhat_b).max())
    scale = max(1.0, float(np.abs(zhat_a).max()))

    beta = scenario.dac.beta
    rec_a = attack(EavesdropperView.intercept(first, scenario.topo, beta))
    rec_b = attack(EavesdropperView.intercept(second, scenario.topo, beta))
    times = rec_a.times
    residual_a = rec_a.z_rec - scenario.references.values(times)
    residual_b = rec_b.z_rec - shifted_refs.values(times)
    gap = residual_a - residual_b
    delta_values = delta.values(times)

    peak = np.abs(delta_values).max(axis=0)
    moved = peak > 0
    if moved.any():
        gap_error = float(
            (np.abs(gap[:, moved] - delta_values[:, moved]).max(axis=0) / peak[moved]).max()
        )
    else:
        gap_error = float(np.abs(gap).max())
    logger.info(
        f"indistinguishability: max deviation {deviation:.3g} (scale {scale:.3g}), "
        f"residual gap error {gap_error:.3g}"
    )
    return IndistinguishabilityResult(deviation, scale, gap_error, times, gap, delta_values)
