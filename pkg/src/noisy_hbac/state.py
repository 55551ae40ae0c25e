"""Diagonal density-matrix states and polarization arithmetic.

States are stored as their computational-basis diagonal. Index ``b`` of a
``2**m`` vector is the big-endian bitstring of the qubits, so the target
(first) qubit is the most significant bit. When a reset qubit is attached it
occupies the least significant bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

#: Negative entries down to this value are treated as round-off and clamped.
CLAMP_TOL = 1e-15
#: Allowed deviation of a probability vector's sum from one.
SUM_TOL = 1e-12
#: Largest reset polarization accepted.
MAX_EPS0 = 5.0


@dataclass(frozen=True, eq=False)
class DiagonalState:
    """Diagonal of an ``m``-qubit density matrix.

    The stored array is a read-only copy. Construction validates
    non-negativity and normalization.
    """

    probs: np.ndarray

    def __post_init__(self):
        probs = np.array(self.probs, dtype=np.float64)
        if probs.ndim != 1 or probs.size < 2:
            raise ValueError("probs must be a 1-D vector of length 2**m with m >= 1")
        m = probs.size.bit_length() - 1
        if probs.size != 1 << m:
            raise ValueError(f"length {probs.size} is not a power of two")
        if not np.all(np.isfinite(probs)):
            raise ValueError("probs must be finite")
        if probs.min() < -CLAMP_TOL:
            raise ValueError(f"negative probability {probs.min():.3e}")
        probs[probs < 0] = 0.0
        total = probs.sum()
        if abs(total - 1.0) > SUM_TOL:
            raise ValueError(f"probabilities sum to {total!r}, not 1")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @property
    def num_qubits(self) -> int:
        return self.probs.size.bit_length() - 1

    @property
    def dim(self) -> int:
        return self.probs.size

    @classmethod
    def maximally_mixed(cls, num_qubits: int) -> DiagonalState:
        d = 1 << num_qubits
        return cls(np.full(d, 1.0 / d))

    def l1_distance(self, other: DiagonalState) -> float:
        return float(np.abs(self.probs - other.probs).sum())

    def __len__(self):
        return self.probs.size

    def __eq__(self, other):
        if not isinstance(other, DiagonalState):
            return NotImplemented
        return np.array_equal(self.probs, other.probs)

    def __hash__(self):
        return hash(self.probs.tobytes())


@dataclass(frozen=True)
class QubitDiagonal:
    """Single-qubit diagonal state summarized by its largest eigenvalue.

    ``ground_dominant`` records whether the larger population sits on ``|0>``.
    """

    lam: float
    ground_dominant: bool = True

    def __post_init__(self):
        if not 0.5 <= self.lam <= 1.0:
            raise ValueError(f"largest eigenvalue must lie in [1/2, 1], got {self.lam!r}")

    @property
    def polarization(self) -> float:
        """Polarization of the qubit; ``inf`` for a pure state."""
        if self.lam == 1.0:
            return math.inf
        return polarization_from_lambda(self.lam)

    @property
    def ground_population(self) -> float:
        return self.lam if self.ground_dominant else 1.0 - self.lam


@dataclass(frozen=True)
class ResetSpec:
    """Thermal reset qubit with polarization ``eps0``."""

    eps0: float
    z: float = field(init=False)

    def __post_init__(self):
        if not (math.isfinite(self.eps0) and 0.0 < self.eps0 <= MAX_EPS0):
            raise ValueError(f"eps0 must lie in (0, {MAX_EPS0}], got {self.eps0!r}")
        object.__setattr__(self, "z", math.exp(self.eps0) + math.exp(-self.eps0))

    @property
    def up(self) -> float:
        """Probability of ``|0>`` in the reset state, ``e^{eps0}/z``."""
        return math.exp(self.eps0) / self.z

    @property
    def down(self) -> float:
        """Probability of ``|1>`` in the reset state, ``e^{-eps0}/z``."""
        return math.exp(-self.eps0) / self.z


def polarization_from_lambda(lam: float) -> float:
    """Return ``0.5 * ln(lam / (1 - lam))``.

    Raises:
        ValueError: if ``lam`` is outside the open interval (0, 1).
    """
    if not 0.0 < lam < 1.0:
        raise ValueError(f"lambda must lie in (0, 1), got {lam!r}")
    return 0.5 * math.log(lam / (1.0 - lam))


def lambda_from_polarization(eps: float) -> float:
    """Inverse of :func:`polarization_from_lambda`: ``e^eps / (e^eps + e^-eps)``."""
    if not math.isfinite(eps):
        raise ValueError(f"polarization must be finite, got {eps!r}")
    if eps >= 0:
        return 1.0 / (1.0 + math.exp(-2.0 * eps))
    t = math.exp(2.0 * eps)
    return t / (1.0 + t)


def reset_state(spec: ResetSpec) -> DiagonalState:
    return DiagonalState(np.array([spec.up, spec.down]))


def oas_state(n: int, eps0: float) -> DiagonalState:
    """Noiseless asymptotic state of ``n`` computation qubits.

    Entries decay geometrically with ratio ``exp(-2 eps0)`` in index order.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    ResetSpec(eps0)
    k = np.arange(1 << n, dtype=np.float64)
    p0 = -math.expm1(-2.0 * eps0) / -math.expm1(-(2 ** (n + 1)) * eps0)
    return DiagonalState(p0 * np.exp(-2.0 * eps0 * k))


def ground_population(probs: np.ndarray) -> float:
    """Probability that the most significant (target) qubit is ``|0>``."""
    return float(probs[: probs.size // 2].sum())


def target_marginal(state: DiagonalState) -> QubitDiagonal:
    s = ground_population(state.probs)
    if s >= 0.5:
        return QubitDiagonal(min(s, 1.0), True)
    return QubitDiagonal(min(1.0 - s, 1.0), False)


def trace_out_reset(full: DiagonalState) -> DiagonalState:
    if full.num_qubits < 2:
        raise ValueError("need at least two qubits to trace out the reset qubit")
    return DiagonalState(full.probs.reshape(-1, 2).sum(axis=1))


def tensor_with_reset(comp: DiagonalState, reset: DiagonalState) -> DiagonalState:
    if reset.num_qubits != 1:
        raise ValueError("reset state must be a single qubit")
    return DiagonalState(np.kron(comp.probs, reset.probs))
