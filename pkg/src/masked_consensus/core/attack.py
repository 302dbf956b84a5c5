"""Eavesdropper commands: single attack and amplitude sweep."""

from pathlib import Path
from typing import List, Optional

import typer
from rich.console import Console
from rich.table import Table

from ..common.errors import ConfigError
from ..services.experiments import attack_run, is_nondecreasing, privacy_sweep
from ..services.writer import attack_columns
from ..utils.logging import get_logger
from .runner import RunContext, command_errors, finish_run, parse_amplitudes, prepare_run

console = Console()
logger = get_logger(__name__)


def _require_adversary(context: RunContext, command: str) -> None:
    if not context.config.adversary.enabled:
        raise ConfigError(f"{command} needs adversary.enabled = true")


def attack(
    config: Path = typer.Option(..., "--config", "-c", help="Scenario TOML file"),
    out_dir: Optional[Path] = typer.Option(None, "--out-dir", "-o", help="Output root directory"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Mask frequency seed"),
    overrides: Optional[List[str]] = typer.Option(
        None, "--set", help="Override a config value: section.key=value"
    ),
) -> None:
    """Reconstruct private signals from intercepted estimates and score the attack."""
    with command_errors("attack"):
        context = prepare_run("attack", config, out_dir, seed, overrides)
        _require_adversary(context, "attack")
        scenario = context.scenario
        console.print(f"🔄 Attacking {scenario.kind} scenario '{scenario.name}'")
        outcome = attack_run(scenario)
        columns = attack_columns(scenario.topo.n, with_power=outcome.kind == "bess")
        context.writer.write_trajectory("attack.csv", outcome.series(), columns)
        metrics = {
            "target": "p_i" if outcome.kind == "bess" else "zdot_i",
            "mask_amplitude": outcome.amplitude,
            "cutoff": outcome.cutoff,
            "decimation": scenario.decimation,
            "rmse_mean": outcome.rmse_mean,
            "rmse_max": outcome.rmse_max,
            "rmse_per_agent": [float(v) for v in outcome.rmse],
        }
        finish_run(context, f"Attack: {scenario.name}", metrics)


def privacy_sweep_command(
    config: Path = typer.Option(..., "--config", "-c", help="Scenario TOML file"),
    amplitudes: str = typer.Option(
        "0,100,250,500,1000", "--amplitudes", "-a", help="Comma-separated mask amplitudes"
    ),
    workers: Optional[int] = typer.Option(None, "--workers", "-w", help="Worker threads"),
    out_dir: Optional[Path] = typer.Option(None, "--out-dir", "-o", help="Output root directory"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Mask frequency seed"),
    overrides: Optional[List[str]] = typer.Option(
        None, "--set", help="Override a config value: section.key=value"
    ),
) -> None:
    """Attack RMSE as a function of the mask amplitude."""
    with command_errors("privacy-sweep"):
        context = prepare_run("privacy-sweep", config, out_dir, seed, overrides)
        _require_adversary(context, "privacy-sweep")
        values = parse_amplitudes(amplitudes)
        scenario = context.scenario
        console.print(f"🔄 Sweeping {len(values)} amplitudes on '{scenario.name}'")
        points = privacy_sweep(scenario, values, workers=workers)

        context.writer.write_csv(
            "sweep.csv",
            ["amplitude", "rmse_mean", "rmse_max"],
            [(p.amplitude, p.rmse_mean, p.rmse_max) for p in points],
        )

        table = Table(title="Privacy sweep")
        table.add_column("A_m", style="cyan", justify="right")
        table.add_column("Mean RMSE", style="green", justify="right")
        table.add_column("Max RMSE", style="green", justify="right")
        for point in points:
            table.add_row(f"{point.amplitude:g}", f"{point.rmse_mean:.6g}", f"{point.rmse_max:.6g}")
        console.print(table)

        monotone = is_nondecreasing(points)
        if not monotone:
            logger.warning("sweep RMSE is not nondecreasing in the amplitude")
        metrics = {
            "amplitudes": [p.amplitude for p in points],
            "rmse_mean": [p.rmse_mean for p in points],
            "rmse_max": [p.rmse_max for p in points],
            "nondecreasing": monotone,
        }
        finish_run(context, f"Sweep summary: {scenario.name}", metrics)
