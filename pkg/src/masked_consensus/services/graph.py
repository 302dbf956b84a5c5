"""Communication graph, Laplacian and its spectral quantities.

Agents are numbered 1..n at the public constructors (``build_topology``,
``ring``) and 0..n-1 everywhere else.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from types import MappingProxyType
from typing import Dict, Iterable, List, Mapping, Sequence, Tuple

import networkx as nx
import numpy as np

from ..common.errors import TopologyError

Edge = Tuple[int, int]


@dataclass(frozen=True)
class Topology:
    """Undirected weighted graph of ``n`` agents.

    ``weights`` maps each undirected edge, keyed ``(i, j)`` with ``i < j`` and
    0-based, to its positive weight ``a_ij``.
    """

    n: int
    weights: Mapping[Edge, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.n < 1:
            raise TopologyError(f"agent count must be >= 1, got {self.n}")
        checked: Dict[Edge, float] = {}
        for (i, j), w in self.weights.items():
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise TopologyError(f"edge ({i}, {j}) out of range for n={self.n}")
            if i == j:
                raise TopologyError(f"self-loop at agent {i}")
            if not w > 0:
                raise TopologyError(f"nonpositive weight {w} on edge ({i}, {j})")
            checked[(min(i, j), max(i, j))] = float(w)
        object.__setattr__(self, "weights", MappingProxyType(dict(sorted(checked.items()))))

    def edges(self) -> List[Tuple[int, int, float]]:
        """Undirected edges as ``(i, j, a_ij)`` with ``i < j``."""
        return [(i, j, w) for (i, j), w in self.weights.items()]

    def directed_edges(self) -> List[Edge]:
        """Both orientations of every edge, sorted."""
        pairs = [(i, j) for i, j in self.weights] + [(j, i) for i, j in self.weights]
        return sorted(pairs)

    def weight(self, i: int, j: int) -> float:
        """Weight of edge ``{i, j}``, 0 when the agents are not adjacent."""
        return self.weights.get((min(i, j), max(i, j)), 0.0)

    def neighbors(self, i: int) -> List[int]:
        """Agents sharing a positive-weight edge with ``i``, ascending."""
        return [j for j in range(self.n) if j != i and self.weight(i, j) > 0]

    def degree(self, i: int) -> int:
        return len(self.neighbors(i))

    @cached_property
    def adjacency(self) -> np.ndarray:
        """Symmetric weighted adjacency matrix, read-only."""
        a = np.zeros((self.n, self.n))
        for (i, j), w in self.weights.items():
            a[i, j] = a[j, i] = w
        a.setflags(write=False)
        return a

    @cached_property
    def laplacian(self) -> np.ndarray:
        """L = D - A, cached so every run on this topology shares one array."""
        a = self.adjacency
        lap = np.diag(a.sum(axis=1)) - a
        lap.setflags(write=False)
        return lap

    @cached_property
    def spectrum(self) -> np.ndarray:
        """Ascending Laplacian eigenvalues, computed once per topology."""
        values = np.linalg.eigvalsh(self.laplacian)
        values.setflags(write=False)
        return values

    def to_networkx(self) -> nx.Graph:
        """Undirected weighted ``networkx`` view with 0-based nodes."""
        graph = nx.Graph()
        graph.add_nodes_from(range(self.n))
        graph.add_weighted_edges_from(self.edges())
        return graph

    def permuted(self, order: Sequence[int]) -> "Topology":
        """Relabel agents so that new agent ``k`` is old agent ``order[k]``."""
        if sorted(order) != list(range(self.n)):
            raise TopologyError(f"not a permutation of 0..{self.n - 1}: {list(order)}")
        position = {old: new for new, old in enumerate(order)}
        return Topology(
            self.n,
            {(position[i], position[j]): w for (i, j), w in self.weights.items()},
        )


def build_topology(n: int, edges: Iterable[Sequence[float]]) -> Topology:
    """Build a topology from 1-based ``(i, j, weight)`` triples.

    A repeated edge is accepted when its weight matches the first occurrence in
    either orientation, and rejected otherwise.
    """
    if n < 1:
        raise TopologyError(f"agent count must be >= 1, got {n}")
    weights: Dict[Edge, float] = {}
    for entry in edges:
        if len(entry) != 3:
            raise TopologyError(f"edge must be (i, j, weight), got {tuple(entry)}")
        i_raw, j_raw, w = entry
        i, j = int(i_raw), int(j_raw)
        if i != i_raw or j != j_raw:
            raise TopologyError(f"agent indices must be integers, got ({i_raw}, {j_raw})")
        if not (1 <= i <= n and 1 <= j <= n):
            raise TopologyError(f"edge ({i}, {j}) out of range 1..{n}")
        if i == j:
            raise TopologyError(f"self-loop at agent {i}")
        weight = float(w)
        if not weight > 0:
            raise TopologyError(f"nonpositive weight {weight} on edge ({i}, {j})")
        key = (min(i, j) - 1, max(i, j) - 1)
        if key in weights and weights[key] != weight:
            raise TopologyError(
                f"conflicting weights for edge ({i}, {j}): {weights[key]} vs {weight}"
            )
        weights[key] = weight
    return Topology(n, weights)


def ring(n: int, weight: float = 1.0) -> Topology:
    """Cycle 1-2-...-n-1 with uniform weight."""
    if n < 2:
        return build_topology(n, [])
    if n == 2:
        return build_topology(2, [(1, 2, weight)])
    return build_topology(n, [(k, k % n + 1, weight) for k in range(1, n + 1)])


def laplacian(t: Topology) -> np.ndarray:
    """Read-only ``D - A`` of the topology."""
    return t.laplacian


def laplacian_spectrum(t: Topology) -> np.ndarray:
    """Ascending Laplacian eigenvalues."""
    return t.spectrum


def fiedler_value(t: Topology) -> float:
    """Second-smallest Laplacian eigenvalue; 0 for a single agent."""
    if t.n < 2:
        return 0.0
    # eigvalsh can return -1e-16 for the kernel direction
    return max(float(t.spectrum[1]), 0.0)


def largest_eigenvalue(t: Topology) -> float:
    """Largest Laplacian eigenvalue; sets the RK4 step limit."""
    return max(float(t.spectrum[-1]), 0.0)


def is_connected(t: Topology) -> bool:
    """Breadth-first reachability from agent 0, independent of any eigenvalue."""
    graph = t.to_networkx()
    return len(nx.node_connected_component(graph, 0)) == t.n
