"""Spectral quantities, step-size guard and tracking bounds for a scenario."""

from pathlib import Path
from typing import Any, Dict, List, Optional

import typer
from rich.console import Console

from ..services import bess, dac
from ..services.graph import fiedler_value, largest_eigenvalue
from ..services.integrator import RK4_STABILITY_MARGIN
from ..services.scenario import DacScenario, FleetScenario
from ..utils.logging import get_logger
from .runner import command_errors, finish_run, prepare_run

console = Console()
logger = get_logger(__name__)


def static_bounds(scenario) -> Dict[str, Any]:
    """Everything computable without integrating."""
    topo, beta = scenario.topo, scenario.dac.beta
    lambda2 = fiedler_value(topo)
    lambda_max = largest_eigenvalue(topo)
    dt_limit = RK4_STABILITY_MARGIN / (beta * lambda_max) if lambda_max > 0 else float("inf")
    report: Dict[str, Any] = {
        "n": topo.n,
        "beta": beta,
        "lambda2": lambda2,
        "lambda_max": lambda_max,
        "dt": scenario.dt,
        "dt_limit": dt_limit,
        "dt_ok": bool(scenario.dt < dt_limit),
        "mask_amplitude": scenario.book.amplitude,
        "omega_range": [scenario.book.omega_min, scenario.book.omega_max],
    }
    if isinstance(scenario, FleetScenario):
        _, rate_p = bess.estimator_rates(topo, scenario.fleet, scenario.dac)
        report["power_dt_limit"] = RK4_STABILITY_MARGIN / rate_p
        report["dt_ok"] = bool(report["dt_ok"] and scenario.dt < report["power_dt_limit"])
        report["a1"] = scenario.fleet.a1
        report["psi"] = scenario.power_ref.derivative_bound()
        report["power_reference_touches_zero"] = scenario.power_ref.touches_zero()
    return report


def dac_bounds(scenario: DacScenario, measure: bool) -> Dict[str, Any]:
    """Static DAC bound report, plus the measured error when ``measure`` is set."""
    lambda2 = fiedler_value(scenario.topo)
    gamma = dac.estimate_gamma(
        scenario.references, scenario.book, scenario.topo, scenario.horizon, scenario.dt
    )
    report: Dict[str, Any] = {
        "gamma_s": gamma,
        "error_bound": dac.error_bound(gamma, scenario.dac, lambda2),
    }
    if measure:
        trajectory = scenario.run()
        measured = dac.steady_state_error(trajectory)
        report["steady_state_error"] = measured
        report["bound_satisfied"] = bool(measured <= report["error_bound"])
    return report


def fleet_bounds(scenario: FleetScenario, measure: bool) -> Dict[str, Any]:
    """Unit-state estimator bound; gamma comes from the allocated powers of a run."""
    if not measure:
        logger.info("fleet gamma needs a run; skipping the unit-state bound")
        return {}
    lambda2 = fiedler_value(scenario.topo)
    trajectory = scenario.run()
    gamma = bess.input_gamma(trajectory, scenario.book, scenario.topo)
    bound = dac.error_bound(gamma, scenario.dac, lambda2)
    start = bess.FLEET_STEADY_STATE
    if not trajectory.after(start).any():
        logger.warning(f"horizon ends before t={start:g} s; measuring from the DAC transient")
        start = dac.steady_state_start(trajectory)
    measured = bess.unit_state_error(trajectory, start)
    return {
        "gamma_s": gamma,
        "error_bound": bound,
        "steady_state_error": measured,
        "bound_satisfied": bool(measured <= bound),
        "min_beta_for_guard": dac.min_beta_for_guard(gamma, scenario.fleet.a1, lambda2),
    }


def check_bounds(
    config: Path = typer.Option(..., "--config", "-c", help="Scenario TOML file"),
    measure: bool = typer.Option(
        True, "--measure/--no-measure", help="Integrate the scenario to measure the error"
    ),
    out_dir: Optional[Path] = typer.Option(None, "--out-dir", "-o", help="Output root directory"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Mask frequency seed"),
    overrides: Optional[List[str]] = typer.Option(
        None, "--set", help="Override a config value: section.key=value"
    ),
) -> None:
    """Report lambda2, gamma_s, the tracking bound and the measured error."""
    with command_errors("check-bounds"):
        context = prepare_run("check-bounds", config, out_dir, seed, overrides)
        scenario = context.scenario
        report = static_bounds(scenario)
        if not report["dt_ok"]:
            logger.warning(f"dt={scenario.dt:g} violates the RK4 guard; skipping the measurement")
            measure = False
        if isinstance(scenario, DacScenario):
            report.update(dac_bounds(scenario, measure))
        else:
            report.update(fleet_bounds(scenario, measure))
        finish_run(context, f"Bounds: {scenario.name}", report)
