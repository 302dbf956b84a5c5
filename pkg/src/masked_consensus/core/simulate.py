"""Simulation commands for the DAC estimator and the battery fleet."""

from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import typer
from rich.console import Console

from ..services import bess, dac
from ..services.graph import fiedler_value, largest_eigenvalue
from ..services.writer import dac_columns, fleet_columns
from ..utils.logging import get_logger
from .runner import command_errors, finish_run, prepare_run, require_kind

console = Console()
logger = get_logger(__name__)


def dac_metrics(scenario, trajectory) -> Dict[str, Any]:
    """Bound report for one DAC run."""
    topo, params = scenario.topo, scenario.dac
    lambda2 = fiedler_value(topo)
    gamma = dac.estimate_gamma(
        scenario.references, scenario.book, topo, scenario.horizon, scenario.dt
    )
    bound = dac.error_bound(gamma, params, lambda2)
    measured = dac.steady_state_error(trajectory)
    gap = dac.conservation_gap(trajectory, scenario.references, scenario.book, topo)
    return {
        "beta": params.beta,
        "lambda2": lambda2,
        "lambda_max": largest_eigenvalue(topo),
        "mask_amplitude": scenario.book.amplitude,
        "gamma_s": gamma,
        "error_bound": bound,
        "steady_state_start": dac.steady_state_start(trajectory),
        "steady_state_error": measured,
        "bound_satisfied": bool(measured <= bound),
        "conservation_gap": float(np.abs(gap).max()),
    }


def fleet_metrics(scenario, trajectory) -> Dict[str, Any]:
    """Spread, conservation, estimation and steady-state metrics of a fleet run."""
    spread = trajectory.series["soc_spread"]
    metrics: Dict[str, Any] = {
        "beta": scenario.dac.beta,
        "kappa": scenario.fleet.kappa,
        "mode": scenario.fleet.mode.value,
        "mask_amplitude": scenario.book.amplitude,
        "initial_soc_spread": float(spread[0]),
        "final_soc_spread": float(spread[-1]),
        "conservation_gap": float(np.abs(bess.fleet_conservation_gap(trajectory)).max()),
        "power_estimation_error": bess.steady_power_error(trajectory),
        "unit_state_estimation_error": bess.steady_state_error_x(trajectory),
    }
    start = bess.FLEET_STEADY_STATE
    window = trajectory.after(start)
    if not window.any():
        logger.warning(f"horizon ends before t={start:g} s; skipping steady-state metrics")
        return metrics
    tracking = trajectory.series["total_power"] - trajectory.series["p_star"]
    rise = spread[window] - np.minimum.accumulate(spread[window])
    lower, upper = bess.delta_band(trajectory, start)
    metrics.update(
        {
            "tracking_error_max": float(np.abs(tracking[window]).max()),
            "soc_spread_max_rise": float(rise.max()),
            "delta_minus": lower,
            "delta_plus": upper,
            "power_envelope_holds": bess.power_envelope_holds(trajectory, start),
            "soc_ratio_drift": bess.soc_ratio_drift(trajectory, start),
        }
    )
    return metrics


def simulate_dac(
    config: Path = typer.Option(..., "--config", "-c", help="Scenario TOML file"),
    out_dir: Optional[Path] = typer.Option(None, "--out-dir", "-o", help="Output root directory"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Mask frequency seed"),
    overrides: Optional[List[str]] = typer.Option(
        None, "--set", help="Override a config value: section.key=value"
    ),
) -> None:
    """Run the masked (or, with zero amplitude, conventional) DAC estimator."""
    with command_errors("simulate-dac"):
        context = prepare_run("simulate-dac", config, out_dir, seed, overrides)
        require_kind(context, "dac", "simulate-dac")
        scenario = context.scenario
        console.print(f"🔄 Integrating {scenario.topo.n} agents for {scenario.horizon:g} s")
        trajectory = scenario.run()
        metrics = dac_metrics(scenario, trajectory)
        context.writer.write_trajectory("dac.csv", trajectory, dac_columns(scenario.topo.n))
        finish_run(context, f"DAC run: {scenario.name}", metrics)


def simulate_bess(
    config: Path = typer.Option(..., "--config", "-c", help="Scenario TOML file"),
    out_dir: Optional[Path] = typer.Option(None, "--out-dir", "-o", help="Output root directory"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Mask frequency seed"),
    overrides: Optional[List[str]] = typer.Option(
        None, "--set", help="Override a config value: section.key=value"
    ),
) -> None:
    """Run the closed-loop battery fleet with SoC balancing."""
    with command_errors("simulate-bess"):
        context = prepare_run("simulate-bess", config, out_dir, seed, overrides)
        require_kind(context, "bess", "simulate-bess")
        scenario = context.scenario
        console.print(f"🔄 Simulating {scenario.topo.n} units for {scenario.horizon:g} s")
        trajectory = scenario.run()
        metrics = fleet_metrics(scenario, trajectory)
        context.writer.write_trajectory("bess.csv", trajectory, fleet_columns(scenario.topo.n))
        finish_run(context, f"Fleet run: {scenario.name}", metrics)
