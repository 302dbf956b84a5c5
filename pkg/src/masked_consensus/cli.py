#!/usr/bin/env python3
"""Main CLI entry point for masked-consensus."""

import typer
from rich.console import Console
from rich.table import Table

from . import __version__
from .core import attack, bounds, simulate
from .services.dac import DacParams
from .services.integrator import RK4_STABILITY_MARGIN
from .services.masking import DEFAULT_FREQ_RANGE
from .utils.paths import default_output_dir, find_configs_dir

app = typer.Typer(
    name="masked-consensus",
    help="Privacy-preserving dynamic average consensus with sinusoidal masks, "
    "battery SoC balancing and an eavesdropper harness",
    add_completion=False,
)
console = Console()

app.command("simulate-dac")(simulate.simulate_dac)
app.command("simulate-bess")(simulate.simulate_bess)
app.command("attack")(attack.attack)
app.command("privacy-sweep")(attack.privacy_sweep_command)
app.command("check-bounds")(bounds.check_bounds)


@app.command()
def info() -> None:
    """Display version, defaults and bundled scenario files."""
    configs_dir = find_configs_dir()
    scenarios = sorted(p.name for p in configs_dir.glob("*.toml")) if configs_dir.exists() else []

    table = Table(title="masked-consensus Info")
    table.add_column("Property", style="cyan")
    table.add_column("Value", style="green")

    table.add_row("Version", __version__)
    table.add_row("Output Directory", str(default_output_dir()))
    table.add_row("Default beta", f"{DacParams().beta:g}")
    table.add_row("Default dt", "0.001 s")
    table.add_row("RK4 guard", f"dt < {RK4_STABILITY_MARGIN:g} / (beta * lambda_max)")
    table.add_row("Mask frequency range", f"[{DEFAULT_FREQ_RANGE[0]:g}, {DEFAULT_FREQ_RANGE[1]:g}] rad/s")
    table.add_row("Mask generator", "numpy Philox, seeded by masking.seed")
    table.add_row("Scenario Directory", str(configs_dir))
    table.add_row("Scenarios", ", ".join(scenarios) or "(none)")

    console.print(table)


if __name__ == "__main__":
    app()
