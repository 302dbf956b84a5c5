"""Runnable scenarios assembled from a validated ``ScenarioConfig``."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Union

from ..common.errors import ConfigError, MaskedConsensusError, ParameterError, TopologyError
from ..utils.config import PowerSection, ScenarioConfig, SignalSection
from ..utils.logging import get_logger
from .adversary import default_cutoff
from .bess import BatteryUnit, FleetConfig, Mode, default_a1, simulate_fleet
from .dac import DacParams, integrate_dac
from .graph import Topology, build_topology, is_connected, ring
from .masking import MaskBook, MaskSource, generate_mask_book
from .signals import ReferenceBank, ReferenceSpec
from .trajectory import Trajectory

logger = get_logger(__name__)


@dataclass(frozen=True)
class DacScenario:
    """Masked DAC over private references."""

    name: str
    topo: Topology
    references: ReferenceBank
    book: MaskBook
    dac: DacParams = DacParams()
    dt: float = 1e-3
    horizon: float = 20.0
    stride: int = 1
    cutoff: Optional[float] = None
    decimation: int = 1

    kind = "dac"

    def run(self, book: Optional[MaskSource] = None) -> Trajectory:
        return integrate_dac(
            self.topo,
            self.dac,
            self.references,
            self.book if book is None else book,
            dt=self.dt,
            horizon=self.horizon,
            stride=self.stride,
        )

    def with_book(self, book: MaskBook) -> "DacScenario":
        return replace(self, book=book)

    @property
    def transient_cutoff(self) -> float:
        return self.cutoff if self.cutoff is not None else default_cutoff(self.topo, self.dac.beta)


@dataclass(frozen=True)
class FleetScenario:
    """Battery fleet with masked unit-state estimation."""

    name: str
    topo: Topology
    fleet: FleetConfig
    power_ref: ReferenceSpec
    book: MaskBook
    dac: DacParams = DacParams()
    dt: float = 1e-3
    horizon: float = 20.0
    stride: int = 1
    cutoff: Optional[float] = None
    decimation: int = 1

    kind = "bess"

    def run(self, book: Optional[MaskSource] = None) -> Trajectory:
        return simulate_fleet(
            self.topo,
            self.fleet,
            self.book if book is None else book,
            self.power_ref,
            self.dac,
            dt=self.dt,
            horizon=self.horizon,
            stride=self.stride,
        )

    def with_book(self, book: MaskBook) -> "FleetScenario":
        return replace(self, book=book)

    @property
    def transient_cutoff(self) -> float:
        return self.cutoff if self.cutoff is not None else default_cutoff(self.topo, self.dac.beta)


Scenario = Union[DacScenario, FleetScenario]


def signal_spec(section: SignalSection) -> ReferenceSpec:
    """Reference spec from a ``[references.agent_k]`` or ``[power.reference]`` table."""
    return ReferenceSpec(section.offset, section.slope, tuple(tuple(t) for t in section.terms))


def topology_from_config(config: ScenarioConfig) -> Topology:
    """Ring or explicit edge list from the ``[topology]`` table."""
    section = config.topology
    if section.kind == "ring":
        return ring(section.n, section.weight)
    return build_topology(section.n, section.edges)


def mask_book_from_config(config: ScenarioConfig, topo: Topology) -> MaskBook:
    """Explicit frequency table when given, else a seeded draw."""
    section = config.masking
    if section.explicit is not None:
        return MaskBook.from_explicit(topo, section.amplitude, section.explicit)
    return generate_mask_book(topo, section.amplitude, section.freq_range, section.seed)


def build_scenario(config: ScenarioConfig) -> Scenario:
    """Assemble topology, mask book and workload; domain errors become ``ConfigError``."""
    try:
        return _build(config)
    except ParameterError as exc:
        raise ConfigError(f"invalid scenario '{config.name}': {exc}") from exc
    except MaskedConsensusError:
        raise
    except ValueError as exc:
        raise ConfigError(f"invalid scenario '{config.name}': {exc}") from exc


def _build(config: ScenarioConfig) -> Scenario:
    topo = topology_from_config(config)
    if not is_connected(topo):
        raise TopologyError(f"topology of '{config.name}' is not connected")
    book = mask_book_from_config(config, topo)
    common = dict(
        name=config.name,
        topo=topo,
        book=book,
        dac=DacParams(config.dac.beta),
        dt=config.dac.dt,
        horizon=config.dac.horizon,
        stride=config.output.decimate,
        cutoff=config.adversary.cutoff,
        decimation=config.adversary.decimation,
    )
    if config.references is not None:
        specs = tuple(
            signal_spec(config.references[f"agent_{k}"]) for k in range(1, topo.n + 1)
        )
        logger.debug(f"built DAC scenario '{config.name}' with {topo.n} agents")
        return DacScenario(references=ReferenceBank(specs), **common)  # type: ignore[arg-type]

    bess = config.bess
    assert bess is not None
    units = tuple(
        BatteryUnit.from_ah(capacity, bess.voltage, soc)
        for capacity, soc in zip(bess.capacities_Ah, bess.soc0)
    )
    fleet = FleetConfig(
        units=units,
        mode=Mode(bess.mode),
        b=tuple(bess.b),
        kappa=bess.kappa,
        a1=default_a1(units, bess.a1_fraction, bess.mode),
        warm_start=bess.warm_start,
    )
    power_ref = signal_spec((config.power or PowerSection()).reference)
    logger.debug(f"built fleet scenario '{config.name}' with {topo.n} units")
    return FleetScenario(fleet=fleet, power_ref=power_ref, **common)  # type: ignore[arg-type]
