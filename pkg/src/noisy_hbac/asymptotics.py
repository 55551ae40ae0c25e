"""Asymptotic states of noisy HBAC and spectral diagnostics."""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .channels import NoiseModel
from .cooling import CoolingConfig, advance, tsac_step_matrix
from .state import DiagonalState, ResetSpec, target_marginal

UNIT_EIGENVALUE_TOL = 1e-9
MAX_SPECTRUM_DIM = 256
#: A recurring state counts as a cycle only if its step shrank by less than this fraction.
CYCLE_CONTRACTION = 1e-6


@dataclass(frozen=True)
class ConvergencePolicy:
    tol: float = 1e-12
    max_iters: int = 100_000
    window: int = 8

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.window < 1:
            raise ValueError("window must be >= 1")


class Status(str, enum.Enum):
    CONVERGED = "converged"
    OSCILLATING = "oscillating"
    MAX_ITERS = "max_iters"


class TrajectoryPoint(NamedTuple):
    iteration: int
    polarization: float
    lam: float


@dataclass(frozen=True)
class AsymptoticReport:
    state: DiagonalState
    iterations_used: int
    status: Status
    residual: float
    trajectory: Optional[list[TrajectoryPoint]] = None

    @property
    def converged(self) -> bool:
        return self.status is Status.CONVERGED

    @property
    def target(self):
        return target_marginal(self.state)


class SpectrumReport(NamedTuple):
    unit_eigenvalue_count: int
    second_modulus: float


def _point(iteration: int, probs: np.ndarray) -> TrajectoryPoint:
    q = target_marginal(DiagonalState(probs))
    return TrajectoryPoint(iteration, q.polarization, q.lam)


def _start(n: int, initial: Optional[DiagonalState]) -> np.ndarray:
    if initial is None:
        return np.full(1 << n, 1.0 / (1 << n))
    if initial.num_qubits != n:
        raise ValueError(f"initial state has {initial.num_qubits} qubits, expected {n}")
    return initial.probs.copy()


def tsac_fixed_point(
    n: int,
    reset: ResetSpec,
    noise: Optional[NoiseModel] = None,
    policy: ConvergencePolicy = ConvergencePolicy(),
    initial: Optional[DiagonalState] = None,
) -> AsymptoticReport:
    """Stationary vector of the noisy TSAC chain by power iteration.

    Iterates ``p <- T_TSAC T_noise p`` from the maximally mixed state (or
    ``initial``) until ``||T p - p||_1 < policy.tol``.
    """
    T = tsac_step_matrix(n, reset, noise)
    probs = _start(n, initial)
    residual = np.inf
    for it in range(1, policy.max_iters + 1):
        nxt = T @ probs
        residual = float(np.abs(nxt - probs).sum())
        probs = nxt
        if residual < policy.tol:
            return AsymptoticReport(DiagonalState(probs), it, Status.CONVERGED, residual)
    return AsymptoticReport(DiagonalState(probs), policy.max_iters, Status.MAX_ITERS, residual)


def iterate_to_convergence(
    config: CoolingConfig,
    policy: ConvergencePolicy = ConvergencePolicy(),
    record_trajectory: bool = False,
    initial: Optional[DiagonalState] = None,
) -> AsymptoticReport:
    """Run :func:`~noisy_hbac.cooling.hbac_iteration` until the state settles.

    Stops with ``CONVERGED`` once successive states differ by less than
    ``policy.tol`` in L1. The run stops as ``OSCILLATING`` when the new state
    returns within ``tol`` of a state ``q`` steps back (``2 <= q <= window``)
    while its step size has not contracted over those ``q`` steps; a damped
    alternating approach to a fixed point therefore still counts as
    converging. Otherwise it ends as ``MAX_ITERS``.
    """
    probs = _start(config.n, initial)
    # (state, L1 size of the step that produced it), most recent last
    history: deque[tuple[np.ndarray, float]] = deque(maxlen=policy.window)
    trajectory = [] if record_trajectory else None
    residual = np.inf
    status = Status.MAX_ITERS
    it = 0
    for it in range(1, policy.max_iters + 1):
        nxt = advance(probs, config)
        history.append((probs, residual))
        residual = float(np.abs(nxt - probs).sum())
        probs = nxt
        if trajectory is not None:
            trajectory.append(_point(it, probs))
        if residual < policy.tol:
            status = Status.CONVERGED
            break
        if _returns(probs, residual, list(history)[:-1], policy.tol):
            status = Status.OSCILLATING
            break
    return AsymptoticReport(DiagonalState(probs), it, status, residual, trajectory)


def _returns(probs, residual, older, tol) -> bool:
    for old, old_residual in older:
        if np.abs(probs - old).sum() < tol and residual >= (1.0 - CYCLE_CONTRACTION) * old_residual:
            return True
    return False


def spectrum_report(T: np.ndarray) -> SpectrumReport:
    """Count unit eigenvalues of ``T`` and find the largest remaining modulus.

    ``second_modulus`` is ``nan`` when every eigenvalue is within tolerance
    of one.
    """
    T = np.asarray(T)
    if T.shape[0] > MAX_SPECTRUM_DIM:
        raise ValueError(f"spectrum_report supports dim <= {MAX_SPECTRUM_DIM}")
    eig = np.linalg.eigvals(T)
    unit = np.abs(eig - 1.0) < UNIT_EIGENVALUE_TOL
    rest = np.abs(eig[~unit])
    return SpectrumReport(int(unit.sum()), float(rest.max()) if rest.size else float("nan"))
