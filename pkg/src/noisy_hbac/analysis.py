"""Purity enhancement of noisy HBAC over noiseless HBAC and noise alone."""

from __future__ import annotations

import enum
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .asymptotics import ConvergencePolicy, Status, iterate_to_convergence, tsac_fixed_point
from .channels import Channel, NoiseModel, flip_probabilities, noise_transfer_matrix
from .cooling import (
    Algorithm,
    CoolingConfig,
    hbac_limit_polarization,
    tsac_unitary_permutation,
)
from .state import (
    DiagonalState,
    ResetSpec,
    ground_population,
    lambda_from_polarization,
    oas_state,
    target_marginal,
)

log = logging.getLogger(__name__)

#: Margins of the one-step enhancement test smaller than this count as ties.
TIE_TOL = 1e-14


class DegenerateChannelError(ValueError):
    """The channel is the identity on diagonals and has no unique fixed point."""


class NonConvergenceError(RuntimeError):
    pass


class CellStatus(str, enum.Enum):
    OK = "ok"
    DEGENERATE = "degenerate"
    NONCONVERGED = "nonconverged"
    OSCILLATING = "oscillating"

    @property
    def valid(self) -> bool:
        return self in (CellStatus.OK, CellStatus.DEGENERATE)


class Cell(NamedTuple):
    p: float
    gamma: float
    lambda_noisy: float
    lambda_hbac: float
    lambda_noise_alone: float
    E: float
    status: CellStatus


def noise_alone_lambda(model: NoiseModel) -> float:
    """Largest eigenvalue of the single-qubit fixed point of the flip dynamics."""
    alpha, beta = flip_probabilities(model)
    if alpha + beta == 0:
        raise DegenerateChannelError(f"{model.kind.value} with alpha = beta = 0 has no unique fixed point")
    s = beta / (alpha + beta)
    return max(s, 1.0 - s)


def hbac_limit_lambda(n: int, eps0: float) -> float:
    return lambda_from_polarization(hbac_limit_polarization(n, eps0))


def noisy_asymptote(n, reset, model, algorithm, policy=ConvergencePolicy()):
    """Asymptotic report of noisy HBAC from the maximally mixed state."""
    if Algorithm(algorithm) is Algorithm.TSAC:
        return tsac_fixed_point(n, reset, model, policy)
    return iterate_to_convergence(CoolingConfig(algorithm, n, reset, model), policy)


def evaluate_cell(
    n: int,
    reset: ResetSpec,
    model: NoiseModel,
    algorithm: Algorithm,
    policy: ConvergencePolicy = ConvergencePolicy(),
) -> Cell:
    gamma = model.gamma if model.kind.uses_gamma else math.nan
    lam_hbac = hbac_limit_lambda(n, reset.eps0)
    if model.is_identity:
        # noisy HBAC coincides with noiseless HBAC; E = 0 by convention
        return Cell(model.p, gamma, lam_hbac, lam_hbac, math.nan, 0.0, CellStatus.DEGENERATE)
    lam_noise = noise_alone_lambda(model)
    report = noisy_asymptote(n, reset, model, algorithm, policy)
    lam_noisy = report.target.lam
    if report.status is Status.CONVERGED:
        status = CellStatus.OK
        E = lam_noisy - max(lam_hbac, lam_noise)
    else:
        status = CellStatus.OSCILLATING if report.status is Status.OSCILLATING else CellStatus.NONCONVERGED
        E = math.nan
    return Cell(model.p, gamma, lam_noisy, lam_hbac, lam_noise, E, status)


def purity_enhancement(
    n: int,
    reset: ResetSpec,
    model: NoiseModel,
    algorithm: Algorithm,
    policy: ConvergencePolicy = ConvergencePolicy(),
) -> float:
    """``Lambda(noisy asymptote) - max(Lambda(HBAC limit), Lambda(noise alone))``.

    Positive values mark the green zone. Identity channels give exactly 0.

    Raises:
        NonConvergenceError: if the noisy process does not settle under ``policy``.
    """
    cell = evaluate_cell(n, reset, model, algorithm, policy)
    if not cell.status.valid:
        raise NonConvergenceError(f"noisy {Algorithm(algorithm).value} did not converge ({cell.status.value})")
    return cell.E


@dataclass(frozen=True)
class EnhancementMap:
    """Purity enhancement over a ``(p, gamma)`` grid, ``p``-major.

    One-parameter channels have ``gamma_steps = None`` and ``gamma = nan`` in
    every cell. Maps read back from CSV may lack the run metadata
    (``n``, ``eps0``, ``algorithm``, ``channel`` set to ``None``).
    """

    n: Optional[int]
    eps0: Optional[float]
    algorithm: Optional[Algorithm]
    channel: Optional[Channel]
    p_steps: int
    gamma_steps: Optional[int]
    cells: tuple[Cell, ...]

    @property
    def grid_step_p(self) -> float:
        return 1.0 / self.p_steps

    @property
    def grid_step_gamma(self) -> Optional[float]:
        return None if self.gamma_steps is None else 1.0 / self.gamma_steps

    @property
    def cell_area(self) -> float:
        area = self.grid_step_p
        if self.gamma_steps is not None:
            area *= self.grid_step_gamma
        return area

    def invalid_cells(self) -> list[Cell]:
        return [c for c in self.cells if not c.status.valid]

    def green_cells(self) -> list[Cell]:
        return [c for c in self.cells if c.status.valid and c.E > 0]

    def find(self, p: float, gamma: float = math.nan) -> Cell:
        for c in self.cells:
            if math.isclose(c.p, p, abs_tol=1e-12) and (
                math.isnan(gamma) and math.isnan(c.gamma) or math.isclose(c.gamma, gamma, abs_tol=1e-12)
            ):
                return c
        raise KeyError((p, gamma))


def grid_steps(step: float) -> int:
    """Number of intervals for a grid step that divides [0, 1]."""
    if not (math.isfinite(step) and 0 < step <= 1):
        raise ValueError(f"grid step must lie in (0, 1], got {step!r}")
    count = round(1.0 / step)
    if abs(count * step - 1.0) > 1e-9:
        raise ValueError(f"grid step {step!r} does not divide [0, 1]")
    return count


def _cell_task(args) -> Cell:
    return evaluate_cell(*args)


def green_zone_sweep(
    n: int,
    reset: ResetSpec,
    channel: Channel,
    algorithm: Algorithm,
    grid_step: float = 0.01,
    policy: ConvergencePolicy = ConvergencePolicy(),
    workers: int = 1,
) -> EnhancementMap:
    """Evaluate the enhancement on every grid point of the noise parameters.

    Grid points are ``i / N`` for ``i = 0..N`` on each axis, endpoints
    included. ``workers > 1`` fans cells across processes; the assembled map
    does not depend on the worker count.
    """
    channel = Channel(channel)
    algorithm = Algorithm(algorithm)
    steps = grid_steps(grid_step)
    axis = [i / steps for i in range(steps + 1)]
    if channel.uses_gamma:
        models = [NoiseModel(channel, p, g) for p in axis for g in axis]
        gamma_steps = steps
    else:
        models = [NoiseModel(channel, p) for p in axis]
        gamma_steps = None
    tasks = [(n, reset, m, algorithm, policy) for m in models]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            cells = tuple(pool.map(_cell_task, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    else:
        cells = tuple(map(_cell_task, tasks))
    return EnhancementMap(n, reset.eps0, algorithm, channel, steps, gamma_steps, cells)


def enhancement_volume(emap: EnhancementMap) -> float:
    """Grid sum of ``cell_area * max(0, E)``; invalid cells are skipped."""
    bad = emap.invalid_cells()
    if bad:
        log.warning("excluding %d invalid cell(s) from the enhancement volume", len(bad))
    area = emap.cell_area
    total = 0.0
    for c in emap.cells:
        if c.status.valid:
            total += area * max(0.0, c.E)
    return total


STAGES = ("oas", "after_noise", "after_reset", "after_compression")


@dataclass(frozen=True)
class OasStepReport:
    """One noisy iteration started from the noiseless asymptotic state.

    Stage states are the ``n`` computation qubits; the full ``n + 1`` qubit
    vectors around the compression are kept as ``*_full``.
    ``delta_lambda`` is the change of the target's ``|0>`` population over
    the iteration.
    """

    n: int
    eps0: float
    model: NoiseModel
    compression: Algorithm
    oas: DiagonalState
    after_noise: DiagonalState
    after_reset: DiagonalState
    after_compression: DiagonalState
    after_reset_full: DiagonalState
    after_compression_full: DiagonalState
    lambda_after_noise_closed: float
    lambda_after_compression_closed: Optional[float]
    delta_lambda: float
    condition_holds: bool

    def stage(self, name: str) -> DiagonalState:
        if name not in STAGES:
            raise KeyError(name)
        return getattr(self, name)

    def stage_lambda(self, name: str) -> float:
        return target_marginal(self.stage(name)).lam

    def stage_polarization(self, name: str) -> float:
        return target_marginal(self.stage(name)).polarization


def _after_noise_closed(lam: float, alpha: float, beta: float) -> float:
    return (1.0 - alpha) * lam + beta * (1.0 - lam)


def _oas_target_lambda(n: int, eps0: float) -> float:
    # p0 * sum_{m < 2^(n-1)} exp(-2 m eps0)
    half = 1 << (n - 1)
    p0 = -math.expm1(-2.0 * eps0) / -math.expm1(-(2 ** (n + 1)) * eps0)
    return p0 * float(np.exp(-2.0 * eps0 * np.arange(half)).sum())


def _condition_margin(n: int, reset: ResetSpec, model: NoiseModel) -> float:
    alpha, beta = flip_probabilities(model)
    lam = _oas_target_lambda(n, reset.eps0)
    after = noise_transfer_matrix(model, n) @ oas_state(n, reset.eps0).probs
    h = 1 << (n - 1)
    lhs = reset.up * after[h] + beta * (1.0 - lam)
    rhs = reset.down * after[h - 1] + alpha * lam
    return lhs - rhs


def enhancement_condition(n: int, reset: ResetSpec, model: NoiseModel) -> bool:
    """Closed-form test that one noisy TSAC iteration lifts the OAS target purity.

    Margins within :data:`TIE_TOL` of zero count as no enhancement.
    """
    return bool(_condition_margin(n, reset, model) > TIE_TOL)


def oas_one_step(
    n: int,
    reset: ResetSpec,
    model: NoiseModel,
    compression: Algorithm = Algorithm.TSAC,
) -> OasStepReport:
    """Stage-by-stage trace of one noisy iteration applied to the OAS.

    ``compression=PPA`` sorts the full diagonal instead of applying the fixed
    two-sort permutation; the closed-form compression value is then ``None``.
    """
    compression = Algorithm(compression)
    alpha, beta = flip_probabilities(model)
    oas = oas_state(n, reset.eps0)
    noisy = noise_transfer_matrix(model, n) @ oas.probs
    full = np.kron(noisy, (reset.up, reset.down))
    if compression is Algorithm.TSAC:
        compressed = full[tsac_unitary_permutation(n + 1)]
    else:
        compressed = full[np.argsort(-full, kind="stable")]
    after_compression = compressed.reshape(-1, 2).sum(axis=1)

    lam0 = ground_population(oas.probs)
    lam_noise = _after_noise_closed(lam0, alpha, beta)
    lam_comp = None
    if compression is Algorithm.TSAC:
        h = 1 << (n - 1)
        lam_comp = lam_noise + reset.up * noisy[h] - reset.down * noisy[h - 1]
    delta = ground_population(after_compression) - lam0
    return OasStepReport(
        n=n,
        eps0=reset.eps0,
        model=model,
        compression=compression,
        oas=oas,
        after_noise=DiagonalState(noisy),
        after_reset=DiagonalState(full.reshape(-1, 2).sum(axis=1)),
        after_compression=DiagonalState(after_compression),
        after_reset_full=DiagonalState(full),
        after_compression_full=DiagonalState(compressed),
        lambda_after_noise_closed=lam_noise,
        lambda_after_compression_closed=lam_comp,
        delta_lambda=delta,
        condition_holds=bool(delta > TIE_TOL),
    )

