"""Exception hierarchy for masked-consensus.

Commands map the two top-level families to process exit codes: configuration
problems exit with 2, numerical failures with 3.
"""

from __future__ import annotations


class MaskedConsensusError(Exception):
    """Base class for every error raised by this package."""

    exit_code: int = 1


class ConfigError(MaskedConsensusError):
    """Raised when a scenario file cannot be parsed or fails validation."""

    exit_code = 2


class TopologyError(MaskedConsensusError, ValueError):
    """Raised for invalid graph construction input."""

    exit_code = 2


class MaskBookError(MaskedConsensusError, ValueError):
    """Raised for inconsistent masking parameters."""

    exit_code = 2


class DimensionError(MaskedConsensusError, ValueError):
    """Raised when vector or bank sizes disagree with the agent count."""

    exit_code = 2


class ParameterError(MaskedConsensusError, ValueError):
    """Raised for an out-of-range numeric parameter such as a step, gain or horizon."""

    exit_code = 2


class NumericalError(MaskedConsensusError):
    """Base class for failures detected while integrating or measuring."""

    exit_code = 3


class UnstableStepError(NumericalError):
    """Raised when the step size violates the RK4 stability guard."""


class DivergenceError(NumericalError):
    """Raised when the integrated state stops being finite."""


class SocRangeError(NumericalError):
    """Raised when a state of charge leaves [0, 1] during a fleet run."""


class DecayWindowError(NumericalError):
    """Raised when a decay-rate fit cannot be performed on a trajectory."""


class EmptyWindowError(NumericalError):
    """Raised when a metric window after the transient cutoff has no samples."""
