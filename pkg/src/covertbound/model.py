"""Closed-form channel formulas for the lossy thermal-noise bosonic channel.

Everything here is a pure function of ``(eta, n_bar_b)``: the covertness
constant that sets the square-root-law transmission probability, the
effective depolarizing parameter seen by Bob, its Pauli error vector and the
hashing-bound rate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class ChannelParams:
    """A channel realization: transmittance ``eta`` and thermal photon number ``n_bar_b``."""

    eta: float
    n_bar_b: float

    def __post_init__(self):
        if not (0.0 < self.eta < 1.0):
            raise ValueError(f"eta must lie in (0, 1), got {self.eta!r}")
        if not (self.n_bar_b > 0.0) or not math.isfinite(self.n_bar_b):
            raise ValueError(f"n_bar_b must be a positive finite number, got {self.n_bar_b!r}")


@dataclass(frozen=True)
class PolicyParams:
    """Frame length ``n`` (channel uses) and covertness parameter ``delta``."""

    n: int
    delta: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        if not (0.0 < self.delta < 0.5):
            raise ValueError(f"delta must lie in (0, 0.5), got {self.delta!r}")


@dataclass(frozen=True)
class PauliErrorVector:
    probs: tuple[float, float, float, float]

    def __post_init__(self):
        if len(self.probs) != 4:
            raise ValueError("a Pauli error vector has exactly four entries")
        if any(not (0.0 <= x <= 1.0) for x in self.probs):
            raise ValueError(f"entries must lie in [0, 1], got {self.probs!r}")
        if abs(math.fsum(self.probs) - 1.0) > 1e-12:
            raise ValueError(f"entries must sum to 1, got {math.fsum(self.probs)!r}")
        if not (self.probs[1] == self.probs[2] == self.probs[3]):
            raise ValueError("X, Y and Z error probabilities must coincide")

    @property
    def p_i(self) -> float:
        return self.probs[0]

    def __iter__(self):
        return iter(self.probs)

    def __len__(self):
        return 4


def covertness_constant(params: ChannelParams) -> float:
    """sqrt(2 eta n (1 + eta n)) / (1 - eta).

    Larger values allow a larger covert transmission probability
    ``q <= 2 delta c_cov / sqrt(n)``.
    """
    eta, nb = params.eta, params.n_bar_b
    return math.sqrt(2.0 * eta * nb * (1.0 + eta * nb)) / (1.0 - eta)


def depolarizing_p(params: ChannelParams) -> float:
    """Effective depolarizing probability of Bob's dual-rail qubit."""
    eta, nb = params.eta, params.n_bar_b
    return 1.0 - eta / (1.0 + (1.0 - eta) * nb) ** 4


def pauli_vector(p: float) -> PauliErrorVector:
    if not (0.0 <= p <= 1.0):
        raise ValueError(f"depolarizing probability must lie in [0, 1], got {p!r}")
    q = p / 4.0
    return PauliErrorVector((1.0 - 3.0 * q, q, q, q))


def shannon_entropy(vec: Sequence[float] | PauliErrorVector) -> float:
    """Shannon entropy in bits, with 0 log 0 taken as 0."""
    probs = np.asarray(tuple(vec), dtype=float)
    if probs.ndim != 1 or probs.size == 0:
        raise ValueError("expected a non-empty 1-D probability vector")
    if np.any(probs < 0.0):
        raise ValueError("probabilities must be nonnegative")
    if abs(math.fsum(probs) - 1.0) > 1e-9:
        raise ValueError(f"probabilities must sum to 1, got {math.fsum(probs)!r}")
    h = 0.0
    for x in probs.tolist():
        if x > 0.0:
            h -= x * math.log2(x)
    return max(h, 0.0)


def hashing_rate(p: float) -> float:
    """Hashing-bound rate [1 - H(pauli_vector(p))]^+ in qubits per transmitted qubit."""
    return max(1.0 - shannon_entropy(pauli_vector(p)), 0.0)
