"""Scenario configuration: TOML files validated by pydantic models."""

import os
import sys
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from ..common.errors import ConfigError
from .paths import OUT_DIR_ENV

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

LOG_LEVEL_ENV = "MASKED_CONSENSUS_LOG_LEVEL"

LogLevel = Literal["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class TopologySection(_Section):
    kind: Literal["ring", "edges"] = "ring"
    n: int = Field(default=6, ge=1)
    weight: float = Field(default=1.0, gt=0)
    edges: List[Tuple[int, int, float]] = Field(default_factory=list)

    @model_validator(mode="after")
    def _edges_match_kind(self) -> "TopologySection":
        if self.kind == "ring" and self.edges:
            raise ValueError("edges are only allowed with kind = 'edges'")
        return self


class SignalSection(_Section):
    """``offset + slope*t + sum A sin(omega t + phase)``."""

    offset: float = 0.0
    slope: float = 0.0
    terms: List[List[float]] = Field(default_factory=list)

    @field_validator("terms")
    @classmethod
    def _term_shape(cls, terms: List[List[float]]) -> List[List[float]]:
        for term in terms:
            if len(term) not in (2, 3):
                raise ValueError(f"term must be [A, omega] or [A, omega, phase], got {term}")
        return terms


def _default_power() -> SignalSection:
    return SignalSection(offset=4200.0, terms=[[4200.0, 1.0, 0.0]])


class PowerSection(_Section):
    reference: SignalSection = Field(default_factory=_default_power)


class MaskingSection(_Section):
    amplitude: float = Field(default=500.0, ge=0)
    freq_range: Tuple[float, float] = (1.0, 10.0)
    seed: int = Field(default=0, ge=0)
    explicit: Optional[List[Tuple[int, int, float]]] = None

    @field_validator("freq_range")
    @classmethod
    def _ordered_range(cls, value: Tuple[float, float]) -> Tuple[float, float]:
        lo, hi = value
        if not 0 < lo < hi:
            raise ValueError(f"need 0 < lo < hi, got [{lo}, {hi}]")
        return value


class DacSection(_Section):
    beta: float = Field(default=400.0, gt=0)
    dt: float = Field(default=1e-3, gt=0)
    horizon: float = Field(default=20.0, gt=0)

    @model_validator(mode="after")
    def _horizon_holds_a_step(self) -> "DacSection":
        if self.horizon < self.dt:
            raise ValueError(f"horizon {self.horizon:g} s is shorter than one step dt={self.dt:g} s")
        return self


class BessSection(_Section):
    capacities_Ah: List[float]
    voltage: float = Field(default=50.0, gt=0)
    soc0: List[float]
    mode: Literal["discharge", "charge"] = "discharge"
    kappa: float = Field(default=300.0, gt=0)
    b: List[int]
    a1_fraction: float = Field(default=0.05, gt=0, le=1)
    warm_start: bool = False

    @model_validator(mode="after")
    def _same_lengths(self) -> "BessSection":
        sizes = {len(self.capacities_Ah), len(self.soc0), len(self.b)}
        if len(sizes) != 1:
            raise ValueError(
                f"capacities_Ah, soc0 and b differ in length: "
                f"{len(self.capacities_Ah)}, {len(self.soc0)}, {len(self.b)}"
            )
        return self


class AdversarySection(_Section):
    enabled: bool = True
    cutoff: Optional[float] = Field(default=None, ge=0)
    decimation: int = Field(default=1, ge=1)


class OutputSection(_Section):
    dir: Optional[str] = None
    decimate: int = Field(default=1, ge=1)
    # also write the package log into the run directory
    log: bool = False


class ScenarioConfig(_Section):
    """A complete scenario: exactly one of ``references`` or ``bess``."""

    name: str = "scenario"
    log_level: LogLevel = "INFO"
    topology: TopologySection = Field(default_factory=TopologySection)
    references: Optional[Dict[str, SignalSection]] = None
    power: Optional[PowerSection] = None
    masking: MaskingSection = Field(default_factory=MaskingSection)
    dac: DacSection = Field(default_factory=DacSection)
    bess: Optional[BessSection] = None
    adversary: AdversarySection = Field(default_factory=AdversarySection)
    output: OutputSection = Field(default_factory=OutputSection)

    @field_validator("log_level", mode="before")
    @classmethod
    def _upper_level(cls, value: Any) -> Any:
        return value.strip().upper() if isinstance(value, str) else value

    @model_validator(mode="after")
    def _one_workload(self) -> "ScenarioConfig":
        if (self.references is None) == (self.bess is None):
            raise ValueError("exactly one of [references] or [bess] must be present")
        n = self.topology.n
        if self.references is not None:
            expected = {f"agent_{k}" for k in range(1, n + 1)}
            if set(self.references) != expected:
                raise ValueError(
                    f"references must define agent_1 .. agent_{n}, got {sorted(self.references)}"
                )
        if self.bess is not None and len(self.bess.capacities_Ah) != n:
            raise ValueError(f"bess defines {len(self.bess.capacities_Ah)} units for n={n}")
        if self.power is not None and self.bess is None:
            raise ValueError("[power] only applies to bess scenarios")
        return self

    @property
    def kind(self) -> str:
        return "bess" if self.bess is not None else "dac"


def _load_env_file() -> None:
    env_file = Path.cwd() / ".env"
    if env_file.exists():
        from dotenv import load_dotenv

        load_dotenv(env_file)


def _read_toml(config_file: Path) -> Dict[str, Any]:
    try:
        with open(config_file, "rb") as f:
            return tomllib.load(f)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {config_file}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{config_file}: {exc}") from exc


def parse_override(item: str) -> Tuple[List[str], Any]:
    """Split ``section.key=value``; the value is read as a TOML literal when possible."""
    if "=" not in item:
        raise ConfigError(f"override must look like section.key=value, got '{item}'")
    key, raw = item.split("=", 1)
    path = [part.strip() for part in key.strip().split(".")]
    if not all(path):
        raise ConfigError(f"invalid override key '{key}'")
    try:
        value = tomllib.loads(f"v = {raw.strip()}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw.strip()
    return path, value


def _set_path(data: Dict[str, Any], path: Sequence[str], value: Any) -> None:
    node = data
    for part in path[:-1]:
        child = node.setdefault(part, {})
        if not isinstance(child, dict):
            raise ConfigError(f"cannot override inside non-table key '{part}'")
        node = child
    node[path[-1]] = value


def _apply_env_overrides(data: Dict[str, Any]) -> None:
    out_dir = os.getenv(OUT_DIR_ENV)
    if out_dir:
        _set_path(data, ["output", "dir"], str(Path(out_dir).expanduser()))
    log_level = os.getenv(LOG_LEVEL_ENV)
    if log_level:
        data["log_level"] = log_level


def validate_config(data: Dict[str, Any], source: str = "<config>") -> ScenarioConfig:
    """Validate raw data; every problem is reported with its dotted location."""
    try:
        return ScenarioConfig.model_validate(data)
    except ValidationError as exc:
        problems = []
        for error in exc.errors():
            dotted = ".".join(str(part) for part in error["loc"]) or "<root>"
            problems.append(f"{dotted}: {error['msg']}")
        raise ConfigError(f"{source}: " + "; ".join(problems)) from None


def load_config(
    config_file: Path,
    overrides: Sequence[str] = (),
    seed: Optional[int] = None,
    out_dir: Optional[Path] = None,
) -> ScenarioConfig:
    """Load a scenario file and merge environment, ``--set`` and flag overrides."""
    _load_env_file()
    data = _read_toml(config_file)
    _apply_env_overrides(data)
    for item in overrides:
        path, value = parse_override(item)
        _set_path(data, path, value)
    if seed is not None:
        _set_path(data, ["masking", "seed"], seed)
    if out_dir is not None:
        _set_path(data, ["output", "dir"], str(out_dir))
    return validate_config(data, str(config_file))


def dump_config(config: ScenarioConfig) -> Dict[str, Any]:
    """Effective configuration as plain JSON-compatible data."""
    return config.model_dump(mode="json")
