import itertools
from functools import reduce

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from noisy_hbac.channels import (
    Channel,
    NoiseModel,
    apply_kraus_dense,
    apply_noise_diagonal,
    flip_probabilities,
    is_column_stochastic,
    kraus_operators,
    noise_transfer_matrix,
    random_density_matrix,
    single_qubit_transfer,
)
from noisy_hbac.state import DiagonalState

models = st.builds(
    NoiseModel,
    st.sampled_from(list(Channel)),
    st.floats(0.0, 1.0),
    st.floats(0.0, 1.0),
)


def bits(x, n):
    return [(x >> (n - 1 - k)) & 1 for k in range(n)]


def brute_force_noise(alpha, beta, n):
    """Entry by entry, one qubit at a time, column = source."""
    d = 2**n
    T = np.zeros((d, d))
    for i in range(d):
        for j in range(d):
            prob = 1.0
            for bi, bj in zip(bits(i, n), bits(j, n)):
                prob *= {(0, 0): 1 - alpha, (0, 1): alpha, (1, 0): beta, (1, 1): 1 - beta}[bi, bj]
            T[j, i] = prob
    return T


class TestFlips:
    def test_gad_reference_point(self):
        a, b = flip_probabilities(NoiseModel.gad(0.68, 0.20))
        assert a == pytest.approx(0.064, abs=1e-15)
        assert b == pytest.approx(0.136, abs=1e-15)

    def test_depolarizing(self):
        assert flip_probabilities(NoiseModel(Channel.DEPOLARIZING, 1.0)) == (0.5, 0.5)

    def test_gad_zero_gamma(self):
        assert flip_probabilities(NoiseModel.gad(0.3, 0.0)) == (0.0, 0.0)

    def test_bitflip_and_phaseflip(self):
        assert flip_probabilities(NoiseModel(Channel.BITFLIP, 0.25)) == (0.75, 0.75)
        assert flip_probabilities(NoiseModel(Channel.PHASEFLIP, 0.25)) == (0.0, 0.0)

    @pytest.mark.parametrize("p, gamma", [(-0.1, 0.5), (0.5, 1.2)])
    def test_rejects(self, p, gamma):
        with pytest.raises(ValueError):
            NoiseModel.gad(p, gamma)

    def test_kind_from_string(self):
        assert NoiseModel("bitflip", 0.5).kind is Channel.BITFLIP


class TestKraus:
    def test_gad_p1(self):
        E = kraus_operators(NoiseModel.gad(1.0, 0.3))
        assert len(E) == 4
        np.testing.assert_allclose(E[0], np.diag([1, np.sqrt(0.7)]))
        assert np.all(E[2] == 0) and np.all(E[3] == 0)

    def test_bitflip_p1(self):
        E = kraus_operators(NoiseModel(Channel.BITFLIP, 1.0))
        assert len(E) == 2
        np.testing.assert_array_equal(E[0], np.eye(2))
        assert np.all(E[1] == 0)

    def test_depolarizing_count(self):
        assert len(kraus_operators(NoiseModel(Channel.DEPOLARIZING, 0.3))) == 4

    @settings(max_examples=100)
    @given(models)
    def test_completeness(self, model):
        total = sum(E.conj().T @ E for E in kraus_operators(model))
        np.testing.assert_allclose(total, np.eye(2), atol=1e-12)

    @given(models)
    def test_incoherent(self, model):
        for E in kraus_operators(model):
            assert np.count_nonzero(E, axis=0).max() <= 1

    @given(models)
    def test_kraus_flip_probabilities(self, model):
        # |<j|E|i>|^2 summed over Kraus operators gives the single-qubit transfer matrix
        T = sum(np.abs(E) ** 2 for E in kraus_operators(model))
        np.testing.assert_allclose(T, single_qubit_transfer(model.flips), atol=1e-14)


class TestTransferMatrix:
    def test_single_qubit(self):
        model = NoiseModel.gad(0.3, 0.6)
        a, b = model.flips
        np.testing.assert_array_equal(noise_transfer_matrix(model, 1), [[1 - a, b], [a, 1 - b]])

    def test_example_entry(self):
        model = NoiseModel.gad(0.35, 0.8)
        a, b = model.flips
        T = noise_transfer_matrix(model, 3)
        assert T[0b100, 0b010] == pytest.approx((1 - a) * a * b, rel=1e-15)

    @pytest.mark.parametrize("model", [NoiseModel.gad(0.68, 0.2), NoiseModel(Channel.DEPOLARIZING, 0.4), NoiseModel(Channel.BITFLIP, 0.1)])
    @pytest.mark.parametrize("n", [2, 3])
    def test_matches_brute_force(self, model, n):
        a, b = model.flips
        np.testing.assert_allclose(noise_transfer_matrix(model, n), brute_force_noise(a, b, n), rtol=0, atol=1e-15)

    @settings(max_examples=200)
    @given(models, st.integers(1, 4))
    def test_kronecker(self, model, n):
        kron = reduce(np.kron, [single_qubit_transfer(model.flips)] * n)
        np.testing.assert_allclose(noise_transfer_matrix(model, n), kron, rtol=0, atol=1e-14)

    @settings(max_examples=1000)
    @given(models, st.integers(1, 4))
    def test_column_stochastic(self, model, n):
        assert is_column_stochastic(noise_transfer_matrix(model, n))

    def test_read_only(self):
        T = noise_transfer_matrix(NoiseModel.gad(0.5, 0.5), 2)
        with pytest.raises(ValueError):
            T[0, 0] = 1.0

    def test_phaseflip_identity(self):
        np.testing.assert_array_equal(noise_transfer_matrix(NoiseModel(Channel.PHASEFLIP, 0.3), 3), np.eye(8))


class TestApplyNoise:
    def test_phaseflip_unchanged(self):
        s = DiagonalState([0.1, 0.2, 0.3, 0.4])
        assert apply_noise_diagonal(s, NoiseModel(Channel.PHASEFLIP, 0.7)) == s

    def test_total_relaxation(self):
        out = apply_noise_diagonal(DiagonalState([0.3, 0.7]), NoiseModel.gad(1.0, 1.0))
        np.testing.assert_array_equal(out.probs, [1.0, 0.0])

    def test_bitflip_fixes_uniform(self):
        u = DiagonalState.maximally_mixed(3)
        out = apply_noise_diagonal(u, NoiseModel(Channel.BITFLIP, 0.2))
        np.testing.assert_allclose(out.probs, u.probs, atol=1e-16)


class TestDenseOracle:
    def test_identity_channel(self):
        rho = random_density_matrix(2, np.random.default_rng(1))
        np.testing.assert_allclose(apply_kraus_dense(rho, NoiseModel.gad(0.4, 0.0), 2), rho, atol=1e-15)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            apply_kraus_dense(np.eye(4) / 4, NoiseModel.gad(0.4, 0.2), 3)

    def test_diagonal_input(self):
        model = NoiseModel.gad(0.7, 0.4)
        p = np.random.default_rng(2).dirichlet(np.ones(8))
        out = apply_kraus_dense(np.diag(p), model, 3)
        np.testing.assert_allclose(np.diag(out).real, noise_transfer_matrix(model, 3) @ p, atol=1e-15)
        np.testing.assert_allclose(out - np.diag(np.diag(out)), 0, atol=1e-15)

    @pytest.mark.parametrize("kind", list(Channel))
    def test_off_diagonals_do_not_leak(self, kind):
        rng = np.random.default_rng(7)
        worst = 0.0
        for _ in range(100):
            model = NoiseModel(kind, rng.uniform(), rng.uniform())
            rho = random_density_matrix(3, rng)
            out = apply_kraus_dense(rho, model, 3)
            assert abs(np.trace(out) - 1) < 1e-12
            np.testing.assert_allclose(out, out.conj().T, atol=1e-12)
            worst = max(worst, np.abs(np.diag(out) - noise_transfer_matrix(model, 3) @ np.diag(rho).real).max())
        assert worst < 1e-12

    def test_random_density_matrix(self):
        rho = random_density_matrix(3, np.random.default_rng(0))
        assert np.trace(rho).real == pytest.approx(1.0, abs=1e-14)
        assert np.linalg.eigvalsh(rho).min() > 0


def test_product_structure_matches_explicit_sum():
    """Sequential per-qubit application equals the sum over all product Kraus operators."""
    model = NoiseModel(Channel.DEPOLARIZING, 0.6)
    rho = random_density_matrix(2, np.random.default_rng(3))
    ops = kraus_operators(model)
    seq = rho
    for q in range(2):
        lifted = [np.kron(E, np.eye(2)) if q == 0 else np.kron(np.eye(2), E) for E in ops]
        seq = sum(L @ seq @ L.conj().T for L in lifted)
    np.testing.assert_allclose(apply_kraus_dense(rho, model, 2), seq, atol=1e-14)
    assert len(list(itertools.product(ops, repeat=2))) == 16
