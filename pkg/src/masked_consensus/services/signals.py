"""Closed-form reference signals with exact derivatives.

Every signal is ``offset + slope*t + sum_k A_k sin(omega_k t + phi_k)``, which
covers the references and the desired total power used in the scenarios and
keeps the derivative exact at any RK4 stage time.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Dict, Iterable, Tuple, Union

import numpy as np

from ..common.errors import DimensionError

Term = Tuple[float, float, float]
TimeLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class ReferenceSpec:
    """Affine-plus-sinusoids signal. Frequencies in rad/s, phases in rad."""

    offset: float = 0.0
    slope: float = 0.0
    terms: Tuple[Term, ...] = ()

    def __post_init__(self) -> None:
        normalised = []
        for term in self.terms:
            if len(term) == 2:
                amplitude, omega = term  # type: ignore[misc]
                phase = 0.0
            elif len(term) == 3:
                amplitude, omega, phase = term
            else:
                raise DimensionError(f"term must be (A, omega[, phase]), got {term}")
            normalised.append((float(amplitude), float(omega), float(phase)))
        object.__setattr__(self, "offset", float(self.offset))
        object.__setattr__(self, "slope", float(self.slope))
        object.__setattr__(self, "terms", tuple(normalised))

    @classmethod
    def constant(cls, value: float) -> "ReferenceSpec":
        return cls(offset=value)

    def value(self, t: TimeLike) -> TimeLike:
        """Signal at ``t``; a float for scalar ``t``, an array for a grid."""
        tt = np.asarray(t, dtype=float)
        out = self.offset + self.slope * tt
        for amplitude, omega, phase in self.terms:
            out = out + amplitude * np.sin(omega * tt + phase)
        return out if np.ndim(out) else float(out)

    def derivative(self, t: TimeLike) -> TimeLike:
        """Exact derivative at ``t``, shaped like ``value``."""
        tt = np.asarray(t, dtype=float)
        out = self.slope + np.zeros_like(tt)
        for amplitude, omega, phase in self.terms:
            out = out + amplitude * omega * np.cos(omega * tt + phase)
        return out if np.ndim(out) else float(out)

    def derivative_bound(self) -> float:
        """Upper bound on |d/dt value| over all t."""
        return abs(self.slope) + sum(abs(a * w) for a, w, _ in self.terms)

    def touches_zero(self) -> bool:
        """True when |offset| does not exceed the total sinusoid amplitude.

        Only meaningful for signals without slope; used to warn about power
        references that violate a positive lower bound.
        """
        return abs(self.offset) <= sum(abs(a) for a, _, _ in self.terms) and self.slope == 0

    def collected(self, decimals: int = 9) -> "ReferenceSpec":
        """The same signal with like sinusoids merged.

        Terms are rewritten with ``omega > 0`` and a phase in ``[0, pi)``, so
        ``A sin(w t)`` and ``-A sin(-w t)`` land on the same key. Zero
        frequency terms fold into the offset; terms whose amplitudes cancel
        exactly are dropped.
        """
        offset = self.offset
        merged: Dict[Tuple[float, float], float] = {}
        for amplitude, omega, phase in self.terms:
            if omega == 0.0:
                offset += amplitude * float(np.sin(phase))
                continue
            if omega < 0:
                amplitude, omega, phase = -amplitude, -omega, -phase
            phase = float(np.mod(phase, 2 * np.pi))
            if phase >= np.pi:
                amplitude, phase = -amplitude, phase - np.pi
            if np.pi - phase < 10.0**-decimals:
                amplitude, phase = -amplitude, 0.0
            key = (round(omega, decimals), round(phase, decimals))
            merged[key] = merged.get(key, 0.0) + amplitude
        terms = tuple((a, w, p) for (w, p), a in sorted(merged.items()) if a != 0.0)
        return ReferenceSpec(offset, self.slope, terms)

    def __add__(self, other: "ReferenceSpec") -> "ReferenceSpec":
        return ReferenceSpec(
            self.offset + other.offset,
            self.slope + other.slope,
            self.terms + other.terms,
        )

    def __neg__(self) -> "ReferenceSpec":
        return ReferenceSpec(
            -self.offset,
            -self.slope,
            tuple((-a, w, p) for a, w, p in self.terms),
        )


@dataclass(frozen=True)
class ReferenceBank:
    """One reference per agent, evaluated together as a vector."""

    specs: Tuple[ReferenceSpec, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "specs", tuple(self.specs))
        if not self.specs:
            raise DimensionError("reference bank needs at least one agent")

    @classmethod
    def constants(cls, values: Iterable[float]) -> "ReferenceBank":
        return cls(tuple(ReferenceSpec.constant(v) for v in values))

    @classmethod
    def zeros(cls, n: int) -> "ReferenceBank":
        return cls.constants([0.0] * n)

    @property
    def n(self) -> int:
        return len(self.specs)

    @cached_property
    def _arrays(self) -> Tuple[np.ndarray, ...]:
        """Offsets, slopes, term parameters and the term-to-agent scatter matrix."""
        offsets = np.array([s.offset for s in self.specs])
        slopes = np.array([s.slope for s in self.specs])
        rows = [(k, a, w, p) for k, s in enumerate(self.specs) for a, w, p in s.terms]
        amplitudes = np.array([r[1] for r in rows])
        omegas = np.array([r[2] for r in rows])
        phases = np.array([r[3] for r in rows])
        scatter = np.zeros((len(rows), self.n))
        for row, (k, _, _, _) in enumerate(rows):
            scatter[row, k] = 1.0
        return offsets, slopes, amplitudes, omegas, phases, scatter

    def values(self, t: TimeLike) -> np.ndarray:
        """Shape ``(n,)`` for scalar t, ``(K, n)`` for a time grid."""
        offsets, slopes, amplitudes, omegas, phases, scatter = self._arrays
        tt = np.asarray(t, dtype=float)[..., None]
        return offsets + slopes * tt + (amplitudes * np.sin(omegas * tt + phases)) @ scatter

    def derivatives(self, t: TimeLike) -> np.ndarray:
        """Exact derivatives, shaped like ``values``."""
        _, slopes, amplitudes, omegas, phases, scatter = self._arrays
        tt = np.asarray(t, dtype=float)[..., None]
        return slopes + 0.0 * tt + (amplitudes * omegas * np.cos(omegas * tt + phases)) @ scatter

    def frequencies(self) -> np.ndarray:
        """Absolute nonzero frequencies of every term across the bank."""
        return np.array([abs(w) for s in self.specs for _, w, _ in s.terms if w != 0])

    def total(self) -> ReferenceSpec:
        """Sum of all agent signals, with like terms collected."""
        total = ReferenceSpec()
        for spec in self.specs:
            total = total + spec
        return total.collected()

    def check_size(self, n: int) -> None:
        """Raise ``DimensionError`` unless the bank has ``n`` agents."""
        if self.n != n:
            raise DimensionError(f"reference bank has {self.n} agents, topology has {n}")

    def __add__(self, other: "ReferenceBank") -> "ReferenceBank":
        if other.n != self.n:
            raise DimensionError(f"cannot add banks of size {self.n} and {other.n}")
        return ReferenceBank(tuple(a + b for a, b in zip(self.specs, other.specs)))

    def __neg__(self) -> "ReferenceBank":
        return ReferenceBank(tuple(-s for s in self.specs))


def eval_value(spec: ReferenceSpec, t: TimeLike) -> TimeLike:
    """Value of ``spec`` at ``t``."""
    return spec.value(t)


def eval_derivative(spec: ReferenceSpec, t: TimeLike) -> TimeLike:
    """Derivative of ``spec`` at ``t``."""
    return spec.derivative(t)


def network_average(bank: ReferenceBank, t: TimeLike) -> Union[float, np.ndarray]:
    """Arithmetic mean of the agent references at ``t``."""
    mean = bank.values(t).mean(axis=-1)
    return float(mean) if np.ndim(mean) == 0 else mean


def antisymmetric_pair(
    n: int, i: int, j: int, amplitude: float, omega: float, phase: float = 0.0
) -> ReferenceBank:
    """Zero-sum perturbation ``A sin(omega t + phase) (e_i - e_j)``, 0-based."""
    if not (0 <= i < n and 0 <= j < n) or i == j:
        raise DimensionError(f"invalid agent pair ({i}, {j}) for n={n}")
    specs = [ReferenceSpec() for _ in range(n)]
    specs[i] = ReferenceSpec(terms=((amplitude, omega, phase),))
    specs[j] = ReferenceSpec(terms=((-amplitude, omega, phase),))
    return ReferenceBank(tuple(specs))

