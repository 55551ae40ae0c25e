"""Randomized self-checks of the channel and transfer-matrix machinery."""

from __future__ import annotations

from functools import reduce
from typing import NamedTuple

import numpy as np

from .channels import (
    Channel,
    NoiseModel,
    apply_kraus_dense,
    is_column_stochastic,
    kraus_operators,
    noise_transfer_matrix,
    random_density_matrix,
    single_qubit_transfer,
)
from .cooling import tsac_transfer_matrix, tsac_unitary_permutation
from .state import ResetSpec

KRAUS_TOL = 1e-12
KRON_TOL = 1e-14


class CheckResult(NamedTuple):
    name: str
    passed: bool
    samples: int
    worst: float


def random_model(rng: np.random.Generator) -> NoiseModel:
    kind = list(Channel)[rng.integers(len(Channel))]
    return NoiseModel(kind, float(rng.uniform()), float(rng.uniform()))


def check_kraus_completeness(rng, samples):
    worst = 0.0
    for _ in range(samples):
        ops = kraus_operators(random_model(rng))
        total = sum(E.conj().T @ E for E in ops)
        worst = max(worst, float(np.abs(total - np.eye(2)).max()))
    return CheckResult("kraus_completeness", worst < KRAUS_TOL, samples, worst)


def check_incoherent(rng, samples):
    """Every Kraus column has at most one nonzero entry."""
    worst = 0.0
    for _ in range(samples):
        for E in kraus_operators(random_model(rng)):
            worst = max(worst, float(np.count_nonzero(E, axis=0).max()))
    return CheckResult("incoherent_kraus", worst <= 1, samples, worst)


def check_stochastic(rng, samples, max_n=4):
    worst = 0.0
    for _ in range(samples):
        n = int(rng.integers(1, max_n + 1))
        for T in (noise_transfer_matrix(random_model(rng), n), tsac_transfer_matrix(n, ResetSpec(float(rng.uniform(0.01, 1.0))))):
            worst = max(worst, float(np.abs(T.sum(axis=0) - 1.0).max()))
            if not is_column_stochastic(T):
                worst = max(worst, 1.0)
    return CheckResult("column_stochastic", worst <= KRAUS_TOL, samples, worst)


def check_kronecker(rng, samples, max_n=4):
    worst = 0.0
    for _ in range(samples):
        model = random_model(rng)
        n = int(rng.integers(1, max_n + 1))
        kron = reduce(np.kron, [single_qubit_transfer(model.flips)] * n)
        worst = max(worst, float(np.abs(noise_transfer_matrix(model, n) - kron).max()))
    return CheckResult("kronecker_factorization", worst <= KRON_TOL, samples, worst)


def check_diagonal_closure(rng, samples, max_n=3):
    """Diagonal of the dense Kraus output equals the transfer matrix acting on the input diagonal."""
    worst = 0.0
    for _ in range(samples):
        model = random_model(rng)
        n = int(rng.integers(1, max_n + 1))
        rho = random_density_matrix(n, rng)
        out = apply_kraus_dense(rho, model, n)
        predicted = noise_transfer_matrix(model, n) @ np.diag(rho).real
        worst = max(worst, float(np.abs(np.diag(out) - predicted).max()))
    return CheckResult("kraus_vs_transfer", worst < KRAUS_TOL, samples, worst)


def check_tsac_pipeline(rng, samples, max_n=4):
    worst = 0.0
    for _ in range(samples):
        n = int(rng.integers(1, max_n + 1))
        reset = ResetSpec(float(rng.uniform(0.01, 1.0)))
        p = rng.dirichlet(np.ones(1 << n))
        full = np.kron(p, (reset.up, reset.down))[tsac_unitary_permutation(n + 1)]
        staged = full.reshape(-1, 2).sum(axis=1)
        worst = max(worst, float(np.abs(staged - tsac_transfer_matrix(n, reset) @ p).max()))
    return CheckResult("tsac_pipeline", worst < KRAUS_TOL, samples, worst)


CHECKS = (
    check_kraus_completeness,
    check_incoherent,
    check_stochastic,
    check_kronecker,
    check_diagonal_closure,
    check_tsac_pipeline,
)


def run_checks(seed: int, samples: int) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    return [check(rng, samples) for check in CHECKS]
