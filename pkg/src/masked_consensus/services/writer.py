"""Atomic CSV/JSON output and the run manifest."""

import csv
import hashlib
import io
import json
import tempfile
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np

from .. import __version__
from ..utils.logging import get_logger
from ..utils.paths import ensure_directory
from .trajectory import Trajectory

logger = get_logger(__name__)

MANIFEST_NAME = "manifest.json"
LOG_NAME = "masked_consensus.log"


def format_number(value: Any) -> str:
    """17 significant digits, enough to round-trip any double."""
    return format(float(value), ".17g")


def dac_columns(n: int) -> List[str]:
    """CSV header of a DAC run: estimates, true average, then errors."""
    return (
        [f"zhat_{k}" for k in range(1, n + 1)]
        + ["true_average"]
        + [f"err_{k}" for k in range(1, n + 1)]
    )


def fleet_columns(n: int) -> List[str]:
    """CSV header of a fleet run, in the order the rows are assembled."""
    agents = range(1, n + 1)
    return (
        [f"soc_{k}" for k in agents]
        + [f"p_{k}" for k in agents]
        + ["total_power", "p_star"]
        + [f"xhat_{k}" for k in agents]
        + [f"phat_{k}" for k in agents]
        + ["soc_spread"]
    )


def attack_columns(n: int, with_power: bool = False) -> List[str]:
    """Per-agent attack columns; ``with_power`` adds the fleet power pair."""
    columns = []
    for k in range(1, n + 1):
        columns += [f"ztrue_{k}", f"zrec_{k}", f"zdotrec_{k}"]
        if with_power:
            columns += [f"ptrue_{k}", f"prec_{k}"]
    return columns


class RunWriter:
    """Writes every file of one run atomically and records it in the manifest."""

    def __init__(
        self,
        run_dir: Path,
        command: str,
        seed: Optional[int] = None,
        config: Optional[Dict[str, Any]] = None,
        log_name: Optional[str] = None,
    ):
        self.run_dir = ensure_directory(run_dir)
        self.command = command
        self.seed = seed
        self.config = config or {}
        self.log_name = log_name
        self._files: List[Dict[str, Any]] = []

    @property
    def files(self) -> List[Dict[str, Any]]:
        return list(self._files)

    def _write_atomic(self, name: str, text: str) -> Path:
        """Write to a temporary file in the run directory, then move it into place."""
        target = self.run_dir / name
        with tempfile.NamedTemporaryFile(
            mode="w",
            suffix=".tmp",
            dir=self.run_dir,
            delete=False,
            encoding="utf-8",
            newline="",
        ) as tmp_file:
            tmp_file.write(text)
            tmp_path = Path(tmp_file.name)
        tmp_path.replace(target)
        return target

    def _record(self, name: str, text: str, rows: Optional[int]) -> None:
        self._files = [f for f in self._files if f["name"] != name]
        self._files.append(
            {
                "name": name,
                "rows": rows,
                "sha256": hashlib.sha256(text.encode("utf-8")).hexdigest(),
            }
        )

    def write_csv(
        self, name: str, header: Sequence[str], rows: Iterable[Sequence[Any]]
    ) -> Path:
        """Write ``rows`` under ``header`` and record the file in the manifest."""
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(header)
        count = 0
        for row in rows:
            writer.writerow([format_number(v) for v in row])
            count += 1
        text = buffer.getvalue()
        path = self._write_atomic(name, text)
        self._record(name, text, count)
        logger.debug(f"wrote {path} ({count} rows)")
        return path

    def write_trajectory(
        self, name: str, trajectory: Trajectory, columns: Sequence[str]
    ) -> Path:
        """``t`` followed by the named series, one row per sample."""
        missing = [c for c in columns if c not in trajectory.series]
        if missing:
            raise KeyError(f"trajectory has no series {missing}")
        matrix = np.column_stack(
            [trajectory.times] + [trajectory.series[c] for c in columns]
        )
        return self.write_csv(name, ["t", *columns], matrix.tolist())

    def write_json(self, name: str, payload: Dict[str, Any]) -> Path:
        """Write sorted, indented JSON and record it in the manifest."""
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
        path = self._write_atomic(name, text)
        self._record(name, text, None)
        return path

    def write_manifest(self) -> Path:
        """Manifest of everything written so far; it carries no timestamps."""
        manifest = {
            "command": self.command,
            "version": __version__,
            "seed": self.seed,
            "config": self.config,
            "files": sorted(self._files, key=lambda f: f["name"]),
            # appended to while the run is going, so it carries no hash
            "log": self.log_name,
        }
        text = json.dumps(manifest, indent=2, sort_keys=True) + "\n"
        path = self._write_atomic(MANIFEST_NAME, text)
        logger.info(f"wrote {len(self._files)} files and manifest to {self.run_dir}")
        return path
