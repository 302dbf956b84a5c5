"""Shared plumbing for commands: config loading, run directory, error exits."""

from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Sequence

import typer
from rich.console import Console
from rich.markup import escape
from rich.table import Table

from ..common.errors import ConfigError, MaskedConsensusError
from ..services.scenario import Scenario, build_scenario
from ..services.writer import LOG_NAME, RunWriter
from ..utils.config import ScenarioConfig, dump_config, load_config
from ..utils.logging import get_logger, setup_logging
from ..utils.paths import default_output_dir, run_directory

console = Console()
logger = get_logger(__name__)


@dataclass
class RunContext:
    config: ScenarioConfig
    scenario: Scenario
    writer: RunWriter

    @property
    def run_dir(self) -> Path:
        return self.writer.run_dir


def prepare_run(
    command: str,
    config_file: Path,
    out_dir: Optional[Path],
    seed: Optional[int],
    overrides: Optional[Sequence[str]],
) -> RunContext:
    """Load the scenario, configure logging and open a writer on the run directory."""
    config = load_config(config_file, overrides or (), seed=seed, out_dir=out_dir)
    out_root = Path(config.output.dir) if config.output.dir else default_output_dir()
    run_dir = run_directory(out_root, command, config.name)
    log_name = LOG_NAME if config.output.log else None
    setup_logging(config.log_level, log_file=run_dir / log_name if log_name else None)
    logger.info(f"{command}: scenario '{config.name}' from {config_file}")
    scenario = build_scenario(config)
    writer = RunWriter(
        run_dir,
        command,
        seed=config.masking.seed,
        config=dump_config(config),
        log_name=log_name,
    )
    return RunContext(config, scenario, writer)


def require_kind(context: RunContext, kind: str, command: str) -> None:
    """Reject a scenario whose workload does not match the command."""
    if context.scenario.kind != kind:
        section = "references" if kind == "dac" else "bess"
        raise ConfigError(f"{command} needs a scenario with a [{section}] section")


@contextmanager
def command_errors(command: str) -> Iterator[None]:
    """Turn package errors into a one-line message and the mapped exit code."""
    try:
        yield
    except MaskedConsensusError as exc:
        logger.error(f"{command} failed: {exc}")
        console.print(f"❌ {command} failed: {escape(str(exc))}")
        raise typer.Exit(exc.exit_code)


def metrics_table(title: str, metrics: Dict[str, Any]) -> Table:
    """Two-column Rich table of metric names and formatted values."""
    table = Table(title=title)
    table.add_column("Metric", style="cyan")
    table.add_column("Value", style="green")
    for key, value in metrics.items():
        if isinstance(value, float):
            text = f"{value:.6g}"
        elif isinstance(value, (list, tuple)):
            text = ", ".join(f"{v:.4g}" if isinstance(v, float) else str(v) for v in value)
        else:
            text = str(value)
        table.add_row(key, text)
    return table


def finish_run(context: RunContext, title: str, metrics: Dict[str, Any]) -> None:
    """Write ``metrics.json`` and the manifest, then print the summary."""
    context.writer.write_json("metrics.json", metrics)
    context.writer.write_manifest()
    console.print(metrics_table(title, metrics))
    console.print(f"✓ Results written to {context.run_dir}")


def parse_amplitudes(text: str) -> List[float]:
    """Parse ``--amplitudes 0,100,500`` into floats."""
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ConfigError(f"amplitudes must be comma-separated numbers, got '{text}'") from None
