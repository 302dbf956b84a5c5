"""Path utilities and output directory management."""

import os
import re
from pathlib import Path
from typing import Union

OUT_DIR_ENV = "MASKED_CONSENSUS_OUT_DIR"


def slugify(text: str) -> str:
    """Convert text to a filename-friendly slug."""
    slug = re.sub(r"[^\w\s-]", "", text.lower())
    slug = re.sub(r"[\s_-]+", "-", slug)
    return slug.strip("-")


def ensure_directory(path: Union[str, Path]) -> Path:
    """Ensure a directory exists, creating it if necessary."""
    path_obj = Path(path).expanduser()
    path_obj.mkdir(parents=True, exist_ok=True)
    return path_obj


def default_output_dir() -> Path:
    """Output root from the environment, or ``./runs``."""
    return Path(os.getenv(OUT_DIR_ENV, "runs")).expanduser()


def run_directory(base: Union[str, Path], command: str, scenario: str) -> Path:
    """Directory for one command run: ``<base>/<scenario>/<command>``."""
    return ensure_directory(Path(base) / slugify(scenario) / slugify(command))


def find_configs_dir() -> Path:
    """Locate the bundled ``configs/`` directory next to ``pyproject.toml``."""
    current_dir = Path(__file__).resolve().parent
    while current_dir != current_dir.parent:
        if (current_dir / "pyproject.toml").exists():
            return current_dir / "configs"
        current_dir = current_dir.parent
    return Path.cwd() / "configs"
