"""Uniformly sampled named time series, the output of every run."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np

from ..common.errors import DimensionError, ParameterError


@dataclass
class Trajectory:
    """Uniformly sampled named series.

    ``dt`` is the spacing between kept samples. Per-agent series are named
    ``<prefix>_<k>`` with ``k`` starting at 1.
    """

    dt: float
    series: Dict[str, np.ndarray]
    t0: float = 0.0
    meta: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.dt > 0:
            raise ParameterError(f"sample spacing must be > 0, got {self.dt}")
        lengths = {len(v) for v in self.series.values()}
        if len(lengths) > 1:
            raise DimensionError(f"series lengths differ: {sorted(lengths)}")

    def __len__(self) -> int:
        return len(next(iter(self.series.values()))) if self.series else 0

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(len(self)) * self.dt

    @property
    def names(self) -> List[str]:
        return list(self.series)

    def agent_count(self, prefix: str) -> int:
        """Number of consecutive ``prefix_1 .. prefix_n`` series."""
        count = 0
        while f"{prefix}_{count + 1}" in self.series:
            count += 1
        return count

    def columns(self, prefix: str) -> np.ndarray:
        """Per-agent series stacked as a ``(K, n)`` matrix."""
        n = self.agent_count(prefix)
        if n == 0:
            raise KeyError(f"no series with prefix '{prefix}'")
        return np.column_stack([self.series[f"{prefix}_{k}"] for k in range(1, n + 1)])

    def after(self, start: float) -> np.ndarray:
        """Boolean mask of samples with ``t >= start``."""
        return self.times >= start - 1e-9 * self.dt

    def decimate(self, factor: int) -> "Trajectory":
        """Keep every ``factor``-th sample of every series."""
        if factor < 1:
            raise ParameterError(f"decimation factor must be >= 1, got {factor}")
        return Trajectory(
            self.dt * factor,
            {name: values[::factor] for name, values in self.series.items()},
            self.t0,
            dict(self.meta),
        )


def per_agent(prefix: str, matrix: np.ndarray) -> Dict[str, np.ndarray]:
    """Split a ``(K, n)`` matrix into ``prefix_1 .. prefix_n`` series."""
    return {f"{prefix}_{k + 1}": matrix[:, k] for k in range(matrix.shape[1])}
