"""Shared fixtures: the six-unit ring, its mask book and reference signals."""

from pathlib import Path

import numpy as np
import pytest

from masked_consensus.services.bess import BatteryUnit, FleetConfig, Mode, default_a1
from masked_consensus.services.graph import ring
from masked_consensus.services.masking import RING6_OMEGA, MaskBook
from masked_consensus.services.signals import ReferenceBank, ReferenceSpec

CONFIGS_DIR = Path(__file__).resolve().parents[1] / "configs"

RING6_CAPACITIES_AH = (180.0, 190.0, 200.0, 210.0, 220.0, 230.0)
RING6_SOC0 = (0.96, 0.89, 0.75, 0.80, 0.73, 0.88)
SINUSOID_OMEGAS = (0.5, 0.8, 1.1, 1.4, 1.7, 2.0)


@pytest.fixture
def ring6():
    return ring(6)


@pytest.fixture
def ring6_book(ring6):
    return MaskBook.from_matrix(ring6, 500.0, RING6_OMEGA)


@pytest.fixture
def sinusoid_bank():
    """Six unit-amplitude sinusoids on distinct offsets."""
    return ReferenceBank(
        tuple(
            ReferenceSpec(offset=float(k + 1), terms=((1.0, omega),))
            for k, omega in enumerate(SINUSOID_OMEGAS)
        )
    )


@pytest.fixture
def power_ref():
    return ReferenceSpec(offset=4200.0, terms=((4200.0, 1.0, 0.0),))


def make_fleet(
    capacities_ah=RING6_CAPACITIES_AH,
    soc0=RING6_SOC0,
    b=(1, 0, 0, 0, 0, 0),
    kappa=300.0,
    mode=Mode.DISCHARGING,
    warm_start=False,
    voltage=50.0,
):
    units = tuple(BatteryUnit.from_ah(c, voltage, s) for c, s in zip(capacities_ah, soc0))
    return FleetConfig(
        units=units,
        mode=mode,
        b=tuple(b),
        kappa=kappa,
        a1=default_a1(units, mode=mode),
        warm_start=warm_start,
    )


@pytest.fixture
def ring6_fleet():
    return make_fleet()


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def fleet_factory():
    return make_fleet
