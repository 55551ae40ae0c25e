"""One HBAC iteration: noise, reset and compression on diagonal states."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from .channels import NoiseModel, noise_transfer_matrix
from .state import DiagonalState, ResetSpec

MAX_TOTAL_QUBITS = 12


class Algorithm(str, enum.Enum):
    PPA = "ppa"
    TSAC = "tsac"


@dataclass(frozen=True)
class CoolingConfig:
    algorithm: Algorithm
    n: int
    reset: ResetSpec
    noise: Optional[NoiseModel] = None

    def __post_init__(self):
        object.__setattr__(self, "algorithm", Algorithm(self.algorithm))
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.n + 1 > MAX_TOTAL_QUBITS:
            raise ValueError(f"at most {MAX_TOTAL_QUBITS} qubits in total (n <= {MAX_TOTAL_QUBITS - 1})")


def hbac_limit_polarization(n: int, eps0: float) -> float:
    """Noiseless cooling limit of the target polarization, ``2**(n-1) * eps0``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not eps0 > 0:
        raise ValueError(f"eps0 must be positive, got {eps0!r}")
    return 2 ** (n - 1) * eps0


@lru_cache(maxsize=64)
def _tsac_matrix(n: int, reset: ResetSpec) -> np.ndarray:
    d = 1 << n
    T = np.zeros((d, d))
    k = np.arange(d - 1)
    T[k, k + 1] = reset.up
    T[k + 1, k] = reset.down
    T[0, 0] = reset.up
    T[d - 1, d - 1] = reset.down
    T.setflags(write=False)
    return T


def tsac_transfer_matrix(n: int, reset: ResetSpec) -> np.ndarray:
    """Reset followed by the two-sort compression, reduced to ``n`` qubits.

    Tridiagonal: ``e^{eps0}/z`` on the superdiagonal and at ``[0, 0]``,
    ``e^{-eps0}/z`` on the subdiagonal and at ``[-1, -1]``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    return _tsac_matrix(n, reset)


@lru_cache(maxsize=64)
def tsac_unitary_permutation(n_total: int) -> np.ndarray:
    """Index permutation implementing the two-sort unitary on ``n_total`` qubits.

    Fixes the first and last basis states and swaps ``(2k-1, 2k)`` for every
    other pair. ``out = probs[perm]`` applies it; it is an involution.
    """
    if n_total < 2:
        raise ValueError("n_total must be >= 2")
    d = 1 << n_total
    perm = np.arange(d)
    odd = np.arange(1, d - 1, 2)
    perm[odd], perm[odd + 1] = odd + 1, odd
    perm.setflags(write=False)
    return perm


def ppa_sort(full: DiagonalState) -> DiagonalState:
    return DiagonalState(_sort_desc(full.probs))


def _sort_desc(probs: np.ndarray) -> np.ndarray:
    # stable on the negated values: ties keep their original index order
    return probs[np.argsort(-probs, kind="stable")]


def advance(probs: np.ndarray, config: CoolingConfig) -> np.ndarray:
    """Raw-array iteration used by the hot loops."""
    if config.noise is not None:
        probs = noise_transfer_matrix(config.noise, config.n) @ probs
    full = np.kron(probs, (config.reset.up, config.reset.down))
    if config.algorithm is Algorithm.PPA:
        full = _sort_desc(full)
    else:
        full = full[tsac_unitary_permutation(config.n + 1)]
    return full.reshape(-1, 2).sum(axis=1)


def hbac_iteration(comp: DiagonalState, config: CoolingConfig) -> DiagonalState:
    """Advance the computation qubits by one noisy HBAC iteration.

    Order: noise on the computation qubits, reset (attach the thermal reset
    qubit), compression on all ``n + 1`` qubits, then trace out the reset
    qubit.
    """
    if comp.num_qubits != config.n:
        raise ValueError(f"state has {comp.num_qubits} qubits, config expects {config.n}")
    return DiagonalState(advance(comp.probs, config))


def tsac_step_matrix(n: int, reset: ResetSpec, noise: Optional[NoiseModel] = None) -> np.ndarray:
    """Full TSAC iteration matrix ``T_TSAC @ T_noise``."""
    T = tsac_transfer_matrix(n, reset)
    if noise is None:
        return T
    return T @ noise_transfer_matrix(noise, n)
