"""Single-qubit noise channels acting independently on each computation qubit.

Transfer matrices are column-stochastic: column ``c`` holds the transition
probabilities out of basis state ``c``, so ``T @ p`` advances a diagonal.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass
from functools import lru_cache, reduce
from typing import NamedTuple

import numpy as np

from .state import DiagonalState

STOCHASTIC_TOL = 1e-12

_I = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)


class Channel(str, enum.Enum):
    GAD = "gad"
    DEPOLARIZING = "depolarizing"
    BITFLIP = "bitflip"
    PHASEFLIP = "phaseflip"

    @property
    def uses_gamma(self) -> bool:
        return self is Channel.GAD


class FlipPair(NamedTuple):
    """``alpha`` is P(|0> -> |1>), ``beta`` is P(|1> -> |0>)."""

    alpha: float
    beta: float


@dataclass(frozen=True)
class NoiseModel:
    kind: Channel
    p: float
    gamma: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", Channel(self.kind))
        for name in ("p", "gamma"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value!r}")
        if not self.kind.uses_gamma:
            # gamma carries no meaning here; normalize so equal channels hash equal
            object.__setattr__(self, "gamma", 0.0)

    @classmethod
    def gad(cls, p: float, gamma: float) -> NoiseModel:
        return cls(Channel.GAD, p, gamma)

    @property
    def flips(self) -> FlipPair:
        return flip_probabilities(self)

    @property
    def is_identity(self) -> bool:
        return self.flips == (0.0, 0.0)


def flip_probabilities(model: NoiseModel) -> FlipPair:
    p, g = model.p, model.gamma
    if model.kind is Channel.GAD:
        return FlipPair(g * (1.0 - p), g * p)
    if model.kind is Channel.DEPOLARIZING:
        return FlipPair(p / 2.0, p / 2.0)
    if model.kind is Channel.BITFLIP:
        return FlipPair(1.0 - p, 1.0 - p)
    return FlipPair(0.0, 0.0)


def kraus_operators(model: NoiseModel) -> list[np.ndarray]:
    """Kraus set of the single-qubit channel as 2x2 complex matrices.

    GAD and depolarizing have four operators; bit-flip and phase-flip two.
    Phase-flip uses ``sqrt(p) I, sqrt(1-p) Z`` in analogy with bit-flip.
    """
    p, g = model.p, model.gamma
    if model.kind is Channel.GAD:
        sp, sq = math.sqrt(p), math.sqrt(1.0 - p)
        return [
            sp * np.array([[1, 0], [0, math.sqrt(1.0 - g)]], dtype=complex),
            sp * np.array([[0, math.sqrt(g)], [0, 0]], dtype=complex),
            sq * np.array([[math.sqrt(1.0 - g), 0], [0, 1]], dtype=complex),
            sq * np.array([[0, 0], [math.sqrt(g), 0]], dtype=complex),
        ]
    if model.kind is Channel.DEPOLARIZING:
        w = math.sqrt(p / 4.0)
        return [math.sqrt(1.0 - 0.75 * p) * _I, w * _X, w * _Y, w * _Z]
    if model.kind is Channel.BITFLIP:
        return [math.sqrt(p) * _I, math.sqrt(1.0 - p) * _X]
    return [math.sqrt(p) * _I, math.sqrt(1.0 - p) * _Z]


def single_qubit_transfer(flips: FlipPair) -> np.ndarray:
    a, b = flips
    return np.array([[1.0 - a, b], [a, 1.0 - b]])


def _popcount(x: np.ndarray) -> np.ndarray:
    counts = np.zeros_like(x)
    while np.any(x):
        counts += x & 1
        x = x >> 1
    return counts


@lru_cache(maxsize=64)
def _noise_matrix(flips: FlipPair, n: int) -> np.ndarray:
    a, b = flips
    mask = (1 << n) - 1
    idx = np.arange(1 << n, dtype=np.int64)
    src = idx[np.newaxis, :]  # column = source state i
    dst = idx[:, np.newaxis]  # row = destination state j
    stay0 = _popcount(~src & ~dst & mask)
    up = _popcount(~src & dst & mask)
    down = _popcount(src & ~dst & mask)
    stay1 = _popcount(src & dst)
    T = (1.0 - a) ** stay0 * a**up * b**down * (1.0 - b) ** stay1
    T.setflags(write=False)
    return T


def noise_transfer_matrix(model: NoiseModel, n: int) -> np.ndarray:
    """Transfer matrix of uncorrelated noise on ``n`` qubits.

    Entry ``[j, i]`` is the probability of moving from basis state ``i`` to
    ``j``: each bit independently stays ``0`` (``1-alpha``), rises
    (``alpha``), falls (``beta``) or stays ``1`` (``1-beta``). The result is
    cached and read-only.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    return _noise_matrix(flip_probabilities(model), n)


def apply_noise_diagonal(state: DiagonalState, model: NoiseModel) -> DiagonalState:
    T = noise_transfer_matrix(model, state.num_qubits)
    return DiagonalState(T @ state.probs)


def apply_kraus_dense(rho: np.ndarray, model: NoiseModel, n: int) -> np.ndarray:
    """Apply the ``n``-qubit product channel to a dense density matrix.

    Sums over every tensor product ``E_k1 (x) ... (x) E_kn`` of single-qubit
    Kraus operators.
    """
    rho = np.asarray(rho, dtype=complex)
    d = 1 << n
    if rho.shape != (d, d):
        raise ValueError(f"expected a {d}x{d} density matrix, got shape {rho.shape}")
    ops = kraus_operators(model)
    out = np.zeros_like(rho)
    for combo in itertools.product(ops, repeat=n):
        E = reduce(np.kron, combo)
        out += E @ rho @ E.conj().T
    return out


def is_column_stochastic(T: np.ndarray, tol: float = STOCHASTIC_TOL) -> bool:
    T = np.asarray(T)
    return bool(np.all(T >= 0) and np.all(np.abs(T.sum(axis=0) - 1.0) <= tol))


def random_density_matrix(n: int, rng: np.random.Generator) -> np.ndarray:
    """Full-rank random state ``G G^dag / tr(G G^dag)`` with complex Gaussian ``G``."""
    d = 1 << n
    G = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    rho = G @ G.conj().T
    return rho / np.trace(rho).real
