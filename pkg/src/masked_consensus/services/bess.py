"""Networked battery storage: SoC balancing with masked average estimation.

Each unit estimates the average unit state with the masked DAC and the
average desired power with a leader-follower tracker, then allocates
``p_i = x_i / max(a1/2, xhat_i) * phat_i``. SoC, both estimators and the
allocation form one ``3n``-dimensional ODE integrated with RK4.

Units are SI throughout: seconds, coulombs, volts, joules, watts.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from ..common.errors import DimensionError, EmptyWindowError, ParameterError, SocRangeError
from ..utils.logging import get_logger
from .dac import DacParams
from .graph import Topology, fiedler_value, largest_eigenvalue
from .integrator import check_step_size, integrate, step_count
from .masking import MaskSource, mask_derivative_vector, mask_vector
from .signals import ReferenceSpec
from .trajectory import Trajectory, per_agent

logger = get_logger(__name__)

SECONDS_PER_HOUR = 3600.0
DEFAULT_A1_FRACTION = 0.05
FLEET_STEADY_STATE = 5.0

ArrayLike = Union[float, np.ndarray]


class Mode(str, Enum):
    DISCHARGING = "discharge"
    CHARGING = "charge"

    @property
    def sign(self) -> float:
        """Sign in ``xdot_i = sign * p_i``."""
        return -1.0 if self is Mode.DISCHARGING else 1.0


@dataclass(frozen=True)
class BatteryUnit:
    capacity_As: float
    voltage: float
    soc: float

    def __post_init__(self) -> None:
        if not (self.capacity_As > 0 and self.voltage > 0):
            raise ParameterError(
                f"capacity and voltage must be > 0, got {self.capacity_As}, {self.voltage}"
            )
        if not 0.0 <= self.soc <= 1.0:
            raise ParameterError(f"soc must lie in [0, 1], got {self.soc}")

    @classmethod
    def from_ah(cls, capacity_Ah: float, voltage: float, soc: float) -> "BatteryUnit":
        """Build a unit from a capacity in ampere-hours."""
        return cls(capacity_Ah * SECONDS_PER_HOUR, voltage, soc)

    @property
    def energy_capacity(self) -> float:
        """``C V`` in joules."""
        return self.capacity_As * self.voltage


@dataclass(frozen=True)
class FleetConfig:
    units: Tuple[BatteryUnit, ...]
    mode: Mode
    b: Tuple[int, ...]
    kappa: float
    a1: float
    warm_start: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "units", tuple(self.units))
        object.__setattr__(self, "b", tuple(int(v) for v in self.b))
        object.__setattr__(self, "mode", Mode(self.mode))
        if not self.units:
            raise DimensionError("fleet needs at least one unit")
        if len(self.b) != len(self.units):
            raise DimensionError(f"b has {len(self.b)} entries for {len(self.units)} units")
        if any(v not in (0, 1) for v in self.b) or not any(self.b):
            raise ParameterError(f"b must be 0/1 flags with at least one 1, got {list(self.b)}")
        if not self.kappa > 0:
            raise ParameterError(f"kappa must be > 0, got {self.kappa}")
        if not self.a1 > 0:
            raise ParameterError(f"a1 must be > 0, got {self.a1}")
        x0 = self.unit_states(self.initial_soc)
        if self.a1 > x0.min():
            raise ParameterError(
                f"a1={self.a1:.6g} J exceeds the smallest initial unit state {x0.min():.6g} J"
            )

    @property
    def n(self) -> int:
        return len(self.units)

    @property
    def energy_capacity(self) -> np.ndarray:
        return np.array([u.energy_capacity for u in self.units])

    @property
    def initial_soc(self) -> np.ndarray:
        return np.array([u.soc for u in self.units])

    @property
    def access(self) -> np.ndarray:
        return np.array(self.b, dtype=float)

    def unit_states(self, soc: np.ndarray) -> np.ndarray:
        """Vectorised unit state for one SoC vector or a ``(K, n)`` matrix."""
        cv = self.energy_capacity
        if self.mode is Mode.DISCHARGING:
            return cv * soc
        return cv * (1.0 - soc)


def default_a1(
    units: Sequence[BatteryUnit],
    fraction: float = DEFAULT_A1_FRACTION,
    mode: Union[Mode, str] = Mode.DISCHARGING,
) -> float:
    """``fraction * min(C V)``, or ``fraction * min x_i(0)`` if a unit starts below that.

    A nearly full unit in charge mode has little storable energy, so the
    capacity-based default would sit above its unit state.
    """
    by_capacity = fraction * min(u.energy_capacity for u in units)
    smallest_state = min(unit_state(u, Mode(mode)) for u in units)
    if by_capacity <= smallest_state:
        return by_capacity
    a1 = fraction * smallest_state
    logger.info(
        f"default a1 lowered to {a1:.6g} J: smallest initial unit state is {smallest_state:.6g} J"
    )
    return a1


@dataclass
class FleetState:
    soc: np.ndarray
    xhat: np.ndarray
    phat: np.ndarray
    t: float = 0.0

    def pack(self) -> np.ndarray:
        """Flatten to ``[soc, xhat, phat]`` for the integrator."""
        return np.concatenate([self.soc, self.xhat, self.phat])

    @classmethod
    def unpack(cls, y: np.ndarray, n: int, t: float = 0.0) -> "FleetState":
        """Inverse of ``pack`` for a fleet of ``n`` units."""
        return cls(y[:n], y[n : 2 * n], y[2 * n :], t)


def unit_state(u: BatteryUnit, mode: Mode) -> float:
    """Dischargeable energy ``C V S`` or storable energy ``C V (1 - S)``."""
    if Mode(mode) is Mode.DISCHARGING:
        return u.energy_capacity * u.soc
    return u.energy_capacity * (1.0 - u.soc)


def soc_rhs(u: BatteryUnit, p: ArrayLike) -> ArrayLike:
    """Coulomb counting: ``Sdot = -p / (C V)``; positive power discharges."""
    return -p / u.energy_capacity


def power_estimator_rhs(
    topo: Topology, cfg: FleetConfig, phat: np.ndarray, p_a: float
) -> np.ndarray:
    """``-kappa (L phat + b * (phat - p_a))``."""
    phat = np.asarray(phat, dtype=float)
    if phat.shape != (topo.n,) or cfg.n != topo.n:
        raise DimensionError(f"expected {topo.n} estimates, got {phat.shape} for {cfg.n} units")
    return -cfg.kappa * (topo.laplacian @ phat + cfg.access * (phat - p_a))


def allocate_power(x_i: ArrayLike, xhat_i: ArrayLike, phat_i: ArrayLike, a1: float) -> ArrayLike:
    """``x_i / max(a1/2, xhat_i) * phat_i``; works elementwise on arrays."""
    return x_i / np.maximum(0.5 * a1, xhat_i) * phat_i


def ideal_allocation(x: np.ndarray, p_star: float) -> np.ndarray:
    """Centralised proportional law ``x_i / sum(x) * p*``."""
    x = np.asarray(x, dtype=float)
    return x / x.sum(axis=-1, keepdims=True) * p_star


def soc_spread(soc: Union[FleetState, np.ndarray]) -> ArrayLike:
    """``max_i S_i - min_i S_i``, per sample for a matrix."""
    values = soc.soc if isinstance(soc, FleetState) else np.asarray(soc)
    spread = values.max(axis=-1) - values.min(axis=-1)
    return float(spread) if np.ndim(spread) == 0 else spread


def total_power(p: np.ndarray) -> ArrayLike:
    """Fleet power ``sum_i p_i``, per sample for a matrix."""
    total = np.asarray(p).sum(axis=-1)
    return float(total) if np.ndim(total) == 0 else total


def estimator_rates(topo: Topology, cfg: FleetConfig, dac: DacParams) -> Tuple[float, float]:
    """Fastest decay rates of the unit-state and power estimators."""
    pinned = np.asarray(topo.laplacian) + np.diag(cfg.access)
    return (
        dac.beta * largest_eigenvalue(topo),
        cfg.kappa * float(np.linalg.eigvalsh(pinned)[-1]),
    )


def initial_fleet_state(
    cfg: FleetConfig, book: Optional[MaskSource], topo: Topology, power_ref: ReferenceSpec
) -> FleetState:
    """``xhat(0) = x(0) + m(0)``; ``phat(0)`` is 0, or ``p*(0)/n`` on warm start."""
    soc = cfg.initial_soc
    xhat = cfg.unit_states(soc) + mask_vector(book, topo, 0.0)
    phat = np.zeros(cfg.n)
    if cfg.warm_start:
        phat[:] = float(power_ref.value(0.0)) / cfg.n
    return FleetState(soc, np.asarray(xhat, dtype=float), phat, 0.0)


def simulate_fleet(
    topo: Topology,
    cfg: FleetConfig,
    book: Optional[MaskSource],
    power_ref: ReferenceSpec,
    dac: DacParams,
    dt: float = 1e-3,
    horizon: float = 20.0,
    stride: int = 1,
) -> Trajectory:
    """Integrate SoC, unit-state estimates and power estimates together.

    Inside every RK4 stage the allocation uses that stage's values, the DAC
    input is ``sign * p + mdot(t)``, and the SoC follows Coulomb counting.
    """
    n = topo.n
    if cfg.n != n:
        raise DimensionError(f"fleet has {cfg.n} units, topology has {n} agents")
    rate_x, rate_p = estimator_rates(topo, cfg, dac)
    check_step_size(dt, rate_x, "beta*L")
    check_step_size(dt, rate_p, "kappa*(L + diag(b))")
    if power_ref.touches_zero():
        logger.warning("power reference reaches zero; no positive lower bound on |p*|")
    steps = step_count(dt, horizon)

    lap = topo.laplacian
    cv = cfg.energy_capacity
    access = cfg.access
    half_a1 = 0.5 * cfg.a1
    sign = cfg.mode.sign
    beta, kappa = dac.beta, cfg.kappa

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        soc, xhat, phat = y[:n], y[n : 2 * n], y[2 * n :]
        p = cfg.unit_states(soc) / np.maximum(half_a1, xhat) * phat
        p_a = power_ref.value(t) / n
        return np.concatenate(
            [
                -p / cv,
                sign * p + mask_derivative_vector(book, topo, t) - beta * (lap @ xhat),
                -kappa * (lap @ phat + access * (phat - p_a)),
            ]
        )

    def check(t: float, y: np.ndarray) -> None:
        soc = y[:n]
        if soc.min() < 0.0 or soc.max() > 1.0:
            k = int(np.argmax(np.maximum(-soc, soc - 1.0)))
            raise SocRangeError(f"unit {k + 1} SoC {soc[k]:.6g} left [0, 1] at t={t:.6g} s")

    state = initial_fleet_state(cfg, book, topo, power_ref)
    times, states = integrate(rhs, state.pack(), dt, steps, stride=stride, check=check)

    soc, xhat, phat = states[:, :n], states[:, n : 2 * n], states[:, 2 * n :]
    x = cfg.unit_states(soc)
    p = allocate_power(x, xhat, phat, cfg.a1)
    p_star = np.asarray(power_ref.value(times), dtype=float)
    series = per_agent("soc", soc)
    series.update(per_agent("p", p))
    series["total_power"] = total_power(p)
    series["p_star"] = p_star
    series.update(per_agent("x", x))
    series.update(per_agent("xhat", xhat))
    series.update(per_agent("phat", phat))
    series["soc_spread"] = soc_spread(soc)
    logger.info(
        f"fleet run: n={n} mode={cfg.mode.value} beta={beta:g} kappa={kappa:g} dt={dt:g} "
        f"horizon={horizon:g} final spread={series['soc_spread'][-1]:.6g}"
    )
    return Trajectory(
        dt * stride,
        series,
        meta={
            "beta": beta,
            "kappa": kappa,
            "lambda2": fiedler_value(topo),
            "n": float(n),
            "sign": sign,
            "a1": cfg.a1,
            "step_dt": dt,
        },
    )


def estimation_errors(trajectory: Trajectory) -> Tuple[np.ndarray, np.ndarray]:
    """``(xhat - x_a, phat - p_a)`` as ``(K, n)`` matrices."""
    n = int(trajectory.meta["n"])
    x_a = trajectory.columns("x").mean(axis=1, keepdims=True)
    p_a = trajectory.series["p_star"][:, None] / n
    return trajectory.columns("xhat") - x_a, trajectory.columns("phat") - p_a


def steady_power_error(trajectory: Trajectory, fraction: float = 0.25) -> float:
    """Time-average over the final ``fraction`` of ``max_i |phat_i - p*/n|``."""
    _, e_p = estimation_errors(trajectory)
    tail = max(1, int(round(len(trajectory) * fraction)))
    return float(np.abs(e_p[-tail:]).max(axis=1).mean())


def steady_state_error_x(trajectory: Trajectory, fraction: float = 0.25) -> float:
    """Time-average over the final ``fraction`` of ``max_i |xhat_i - mean(x)|``."""
    e_x, _ = estimation_errors(trajectory)
    tail = max(1, int(round(len(trajectory) * fraction)))
    return float(np.abs(e_x[-tail:]).max(axis=1).mean())


def delta_series(trajectory: Trajectory, rel_floor: float = 1e-2) -> np.ndarray:
    """Multiplicative allocation error ``Delta_i(t)``.

    ``(1 + e_p/p_a) / (1 + e_x/x_a) - 1``; NaN where ``|p_a|`` is below
    ``rel_floor`` times its peak, since the ratio is undefined at ``p_a = 0``.
    """
    n = int(trajectory.meta["n"])
    e_x, e_p = estimation_errors(trajectory)
    x_a = trajectory.columns("x").mean(axis=1, keepdims=True)
    p_a = trajectory.series["p_star"][:, None] / n
    valid = np.abs(p_a) > rel_floor * np.abs(p_a).max()
    with np.errstate(divide="ignore", invalid="ignore"):
        delta = (1 + e_p / p_a) / (1 + e_x / x_a) - 1
    return np.where(valid, delta, np.nan)


def delta_band(trajectory: Trajectory, start: float = FLEET_STEADY_STATE) -> Tuple[float, float]:
    """``(Delta-, Delta+)`` over the samples after ``start``."""
    delta = delta_series(trajectory)[trajectory.after(start)]
    return float(np.nanmin(delta)), float(np.nanmax(delta))


def power_envelope_holds(
    trajectory: Trajectory, start: float = FLEET_STEADY_STATE, rtol: float = 1e-9
) -> bool:
    """Check ``(1+Delta-) p* <= sum p <= (1+Delta+) p*`` after ``start``.

    Only samples with a defined ``Delta`` and an inactive allocation guard
    are checked.
    """
    lower, upper = delta_band(trajectory, start)
    delta = delta_series(trajectory)
    guard_inactive = (trajectory.columns("xhat") >= 0.5 * trajectory.meta["a1"]).all(axis=1)
    window = trajectory.after(start) & ~np.isnan(delta).any(axis=1) & guard_inactive
    p_star = trajectory.series["p_star"][window]
    total = trajectory.series["total_power"][window]
    bound_a, bound_b = (1 + lower) * p_star, (1 + upper) * p_star
    lo, hi = np.minimum(bound_a, bound_b), np.maximum(bound_a, bound_b)
    slack = rtol * np.abs(p_star).max(initial=1.0)
    return bool(np.all(total >= lo - slack) and np.all(total <= hi + slack))


def soc_ratio_drift(trajectory: Trajectory, start: float = FLEET_STEADY_STATE) -> float:
    """Largest change of ``ln(S_i / S_j)`` over the samples after ``start``."""
    window = trajectory.after(start)
    log_soc = np.log(trajectory.columns("soc")[window])
    pairwise = log_soc[:, :, None] - log_soc[:, None, :]
    return float(np.abs(pairwise - pairwise[0]).max())


def fleet_conservation_gap(trajectory: Trajectory) -> np.ndarray:
    """``1'xhat(t) - 1'x(t)`` per sample; the masks sum to zero, so this stays 0."""
    return trajectory.columns("xhat").sum(axis=1) - trajectory.columns("x").sum(axis=1)


def input_gamma(trajectory: Trajectory, book: Optional[MaskSource], topo: Topology) -> float:
    """Sampled sup of ``||(I - 11'/n)(sign p + mdot)||`` along a fleet run."""
    u = trajectory.meta["sign"] * trajectory.columns("p")
    u = u + mask_derivative_vector(book, topo, trajectory.times)
    projected = u - u.mean(axis=1, keepdims=True)
    return float(np.linalg.norm(projected, axis=1).max())


def unit_state_error(trajectory: Trajectory, start: float) -> float:
    """Max over agents and samples after ``start`` of ``|xhat_i - x_a|``."""
    e_x, _ = estimation_errors(trajectory)
    window = trajectory.after(start)
    if not window.any():
        raise EmptyWindowError(f"no samples after t={start:.6g}")
    return float(np.abs(e_x[window]).max())
