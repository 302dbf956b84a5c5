"""Pairwise sinusoidal masks and the per-agent composite mask.

Agent ``i`` sends ``s_ij(t) = A_m sin(omega_ij t)`` to each neighbour ``j`` once,
at initialisation, as the parameter pair ``(A_m, omega_ij)``. Its mask is
``m_i(t) = sum_j (s_ji(t) - s_ij(t))``, so the masks of all agents sum to zero
at every instant.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from types import MappingProxyType
from typing import Dict, Iterable, List, Mapping, Optional, Protocol, Sequence, Tuple

import numpy as np

from ..common.errors import DimensionError, MaskBookError
from ..utils.logging import get_logger
from .graph import Topology
from .signals import ReferenceBank, TimeLike

logger = get_logger(__name__)

DEFAULT_FREQ_RANGE: Tuple[float, float] = (1.0, 10.0)

# Frequency matrix of the six-unit ring: entry (i, j) is chosen by agent i for
# neighbour j (1-based in the comment, 0-based in the array).
RING6_OMEGA = np.array(
    [
        [0.0, 1.11, 0.0, 0.0, 0.0, 3.37],
        [6.12, 0.0, 2.46, 0.0, 0.0, 0.0],
        [0.0, 4.03, 0.0, 3.80, 0.0, 0.0],
        [0.0, 0.0, 8.15, 0.0, 2.49, 0.0],
        [0.0, 0.0, 0.0, 5.75, 0.0, 6.89],
        [5.22, 0.0, 0.0, 0.0, 6.42, 0.0],
    ]
)


class MaskSource(Protocol):
    """Anything the integrators can draw a mask and its derivative from."""

    def vector(self, t: float) -> np.ndarray: ...

    def derivative_vector(self, t: float) -> np.ndarray: ...


@dataclass(frozen=True)
class MaskBook:
    """Common amplitude and one frequency per directed edge (0-based keys)."""

    topo: Topology
    amplitude: float
    freqs: Mapping[Tuple[int, int], float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.amplitude >= 0:
            raise MaskBookError(f"amplitude must be >= 0, got {self.amplitude}")
        expected = set(self.topo.directed_edges())
        given = set(self.freqs)
        if given != expected:
            missing = sorted(expected - given)
            extra = sorted(given - expected)
            raise MaskBookError(
                f"frequencies must cover exactly the directed edges; "
                f"missing={missing} extra={extra}"
            )
        for edge, omega in self.freqs.items():
            if not omega > 0:
                raise MaskBookError(f"frequency on {edge} must be > 0, got {omega}")
        object.__setattr__(self, "amplitude", float(self.amplitude))
        object.__setattr__(
            self,
            "freqs",
            MappingProxyType({e: float(self.freqs[e]) for e in sorted(self.freqs)}),
        )

    @classmethod
    def from_matrix(
        cls, topo: Topology, amplitude: float, omega: Sequence[Sequence[float]]
    ) -> "MaskBook":
        """Load a dense frequency matrix; off-edge entries must be zero."""
        matrix = np.asarray(omega, dtype=float)
        if matrix.shape != (topo.n, topo.n):
            raise MaskBookError(f"omega must be {topo.n}x{topo.n}, got {matrix.shape}")
        edges = set(topo.directed_edges())
        for i in range(topo.n):
            for j in range(topo.n):
                if (i, j) not in edges and matrix[i, j] != 0:
                    raise MaskBookError(f"omega[{i + 1},{j + 1}] set on a non-edge")
        return cls(topo, amplitude, {e: matrix[e] for e in edges})

    @classmethod
    def from_explicit(
        cls, topo: Topology, amplitude: float, entries: Iterable[Sequence[float]]
    ) -> "MaskBook":
        """Load 1-based ``(i, j, omega)`` triples."""
        freqs: Dict[Tuple[int, int], float] = {}
        for entry in entries:
            if len(entry) != 3:
                raise MaskBookError(f"explicit entry must be (i, j, omega), got {entry}")
            i, j, omega = int(entry[0]) - 1, int(entry[1]) - 1, float(entry[2])
            if (i, j) in freqs:
                raise MaskBookError(f"duplicate frequency for ({i + 1}, {j + 1})")
            freqs[(i, j)] = omega
        return cls(topo, amplitude, freqs)

    def with_amplitude(self, amplitude: float) -> "MaskBook":
        """Same frequencies at another amplitude."""
        return MaskBook(self.topo, amplitude, dict(self.freqs))

    def explicit(self) -> List[List[float]]:
        """1-based ``[i, j, omega]`` rows, the inverse of ``from_explicit``."""
        return [[i + 1, j + 1, w] for (i, j), w in self.freqs.items()]

    @property
    def omega_max(self) -> float:
        return max(self.freqs.values(), default=0.0)

    @property
    def omega_min(self) -> float:
        return min(self.freqs.values(), default=0.0)

    @cached_property
    def _edge_arrays(self) -> Tuple[np.ndarray, np.ndarray]:
        """Directed-edge frequencies and the signed incidence matrix.

        Row ``e`` of the incidence has +1 at the receiving agent and -1 at the
        sending agent, so ``signals @ incidence`` is the mask vector.
        """
        edges = list(self.freqs)
        omegas = np.array([self.freqs[e] for e in edges])
        incidence = np.zeros((len(edges), self.topo.n))
        for row, (i, j) in enumerate(edges):
            incidence[row, j] += 1.0
            incidence[row, i] -= 1.0
        omegas.setflags(write=False)
        incidence.setflags(write=False)
        return omegas, incidence

    def pairwise_signal(self, i: int, j: int, t: TimeLike) -> TimeLike:
        """``A sin(omega_ij t)``, the signal agent ``i`` sends to ``j``."""
        if (i, j) not in self.freqs:
            raise MaskBookError(f"no directed edge ({i}, {j}) in mask book")
        out = self.amplitude * np.sin(self.freqs[(i, j)] * np.asarray(t, dtype=float))
        return out if np.ndim(out) else float(out)

    def edge_contribution(self, i: int, j: int, t: TimeLike) -> TimeLike:
        """Contribution of edge {i, j} to ``m_i``; its negation goes to ``m_j``."""
        return self.pairwise_signal(j, i, t) - self.pairwise_signal(i, j, t)

    def vector(self, t: TimeLike) -> np.ndarray:
        """``m(t)``: shape ``(n,)`` for scalar t, ``(K, n)`` for a grid."""
        omegas, incidence = self._edge_arrays
        tt = np.asarray(t, dtype=float)[..., None]
        return (self.amplitude * np.sin(omegas * tt)) @ incidence

    def derivative_vector(self, t: TimeLike) -> np.ndarray:
        omegas, incidence = self._edge_arrays
        tt = np.asarray(t, dtype=float)[..., None]
        return (self.amplitude * omegas * np.cos(omegas * tt)) @ incidence

    def value(self, i: int, t: TimeLike) -> TimeLike:
        """Mask of agent ``i`` summed edge by edge."""
        total = sum(
            (self.edge_contribution(i, j, t) for j in self.topo.neighbors(i)),
            0.0 * np.asarray(t, dtype=float),
        )
        return total if np.ndim(total) else float(total)

    def derivative(self, i: int, t: TimeLike) -> TimeLike:
        """Exact time derivative of ``value(i, t)``."""
        tt = np.asarray(t, dtype=float)
        total = 0.0 * tt
        a = self.amplitude
        for j in self.topo.neighbors(i):
            w_in, w_out = self.freqs[(j, i)], self.freqs[(i, j)]
            total = total + a * w_in * np.cos(w_in * tt) - a * w_out * np.cos(w_out * tt)
        return total if np.ndim(total) else float(total)

    def pairwise_matrix(self, t: float) -> np.ndarray:
        """Psi(t) with entry (i, j) = s_ij(t), zero off the edge set."""
        psi = np.zeros((self.topo.n, self.topo.n))
        for (i, j), omega in self.freqs.items():
            psi[i, j] = self.amplitude * np.sin(omega * t)
        return psi


@dataclass(frozen=True)
class ShiftedMask:
    """Mask ``m - delta`` paired with references ``z + delta``.

    Used to show that two different secrets drive the estimator with the same
    input. ``delta`` must sum to zero across agents and vanish at t = 0.
    """

    book: MaskBook
    delta: ReferenceBank

    def __post_init__(self) -> None:
        self.delta.check_size(self.book.topo.n)
        scale = max(
            1.0,
            max(
                abs(s.offset) + abs(s.slope) + sum(abs(a) for a, _, _ in s.terms)
                for s in self.delta.specs
            ),
        )
        # checked on the collected coefficients, so sampling cannot alias a term away
        total = self.delta.total()
        residual = max([abs(total.offset), abs(total.slope)] + [abs(a) for a, _, _ in total.terms])
        if residual > 1e-9 * scale * self.delta.n:
            raise MaskBookError(
                f"perturbation must sum to zero across agents, residual {residual:.3g}"
            )
        if np.abs(self.delta.values(0.0)).max() > 1e-12 * scale:
            raise MaskBookError("perturbation must vanish at t = 0")

    def vector(self, t: TimeLike) -> np.ndarray:
        return self.book.vector(t) - self.delta.values(t)

    def derivative_vector(self, t: TimeLike) -> np.ndarray:
        return self.book.derivative_vector(t) - self.delta.derivatives(t)


def generate_mask_book(
    topo: Topology,
    amplitude: float,
    freq_range: Tuple[float, float] = DEFAULT_FREQ_RANGE,
    seed: int = 0,
) -> MaskBook:
    """Draw one frequency per directed edge, uniformly in ``freq_range``.

    The generator is NumPy's counter-based Philox seeded with ``seed``; draws
    follow the sorted directed-edge order, so a seed always yields the same
    book.
    """
    lo, hi = float(freq_range[0]), float(freq_range[1])
    if not 0 < lo < hi:
        raise MaskBookError(f"frequency range must satisfy 0 < lo < hi, got {freq_range}")
    rng = np.random.Generator(np.random.Philox(seed))
    edges = topo.directed_edges()
    draws = rng.uniform(lo, hi, size=len(edges))
    logger.debug(f"generated {len(edges)} mask frequencies with seed {seed}")
    return MaskBook(topo, amplitude, dict(zip(edges, draws.tolist())))


def pairwise_signal(book: MaskBook, i: int, j: int, t: TimeLike) -> TimeLike:
    """Signal agent ``i`` sends to neighbour ``j`` at ``t``."""
    return book.pairwise_signal(i, j, t)


def mask_value(book: MaskBook, topo: Topology, i: int, t: TimeLike) -> TimeLike:
    """Mask of agent ``i``, after checking the book fits ``topo``."""
    _check_topology(book, topo)
    return book.value(i, t)


def mask_derivative(book: MaskBook, topo: Topology, i: int, t: TimeLike) -> TimeLike:
    """Mask derivative of agent ``i``, after checking the book fits ``topo``."""
    _check_topology(book, topo)
    return book.derivative(i, t)


def mask_vector(book: Optional[MaskSource], topo: Topology, t: TimeLike) -> np.ndarray:
    """Stacked masks; a missing book means no masking."""
    if book is None:
        return np.zeros(np.shape(t) + (topo.n,))
    return book.vector(t)


def mask_derivative_vector(
    book: Optional[MaskSource], topo: Topology, t: TimeLike
) -> np.ndarray:
    """Stacked mask derivatives; a missing book means no masking."""
    if book is None:
        return np.zeros(np.shape(t) + (topo.n,))
    return book.derivative_vector(t)


def _check_topology(book: MaskBook, topo: Topology) -> None:
    if book.topo.n != topo.n or set(book.topo.weights) != set(topo.weights):
        raise DimensionError("mask book was generated for a different topology")
