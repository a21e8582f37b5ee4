import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gridspect import (
    CurrentModel,
    PhasorDataset,
    add_noise,
    build_admittance,
    center,
    complex_power_loss,
    generate_dataset,
    random_radial_network,
    sample_currents,
    solve_voltages,
    spectral_decompose,
)
from gridspect.estimators import ols_estimate
from gridspect.exceptions import DataError
from gridspect.metrics import relative_frobenius_error
from gridspect.simulation import BLOCK_SIZE, block_average, derive_seed

from conftest import crandn


def _two_bus(y=1 - 1j, s=0.1 + 0.1j):
    return np.array([[y + s, -y], [-y, y + s]])


class TestCurrentModel:
    def test_white_needs_positive_sigma(self):
        with pytest.raises(ValueError):
            CurrentModel(sigma=0.0)

    def test_colored_needs_full_column_rank(self):
        with pytest.raises(ValueError):
            CurrentModel(kind="colored", coloring=np.ones((3, 2)))

    def test_balanced_covariance(self):
        cov = CurrentModel(sigma=2.0, balanced=True).covariance(4)
        np.testing.assert_allclose(cov.sum(1), 0, atol=1e-14)


class TestSampleCurrents:
    def test_balanced_columns(self):
        I = sample_currents(CurrentModel(sigma=1.0, balanced=True), 7, 300, seed=1)
        assert np.all(np.abs(I.sum(0)) <= 1e-12 * np.linalg.norm(I, axis=0))

    def test_white_covariance(self):
        sigma = 0.7
        I = sample_currents(CurrentModel(sigma=sigma), 5, 50000, seed=2)
        S = I @ I.conj().T / I.shape[1]
        target = sigma**2 * np.eye(5)
        assert np.linalg.norm(S - target) / np.linalg.norm(target) <= 0.05

    def test_deterministic(self):
        m = CurrentModel(sigma=1.0)
        np.testing.assert_array_equal(sample_currents(m, 4, 100, 9), sample_currents(m, 4, 100, 9))

    def test_full_blocks_independent_of_length(self):
        m = CurrentModel(sigma=1.0)
        long = sample_currents(m, 3, 2 * BLOCK_SIZE + 5, 4)
        short = sample_currents(m, 3, BLOCK_SIZE + 1, 4)
        np.testing.assert_array_equal(long[:, :BLOCK_SIZE], short[:, :BLOCK_SIZE])

    def test_colored_covariance(self):
        C = np.array([[1, 0], [0.5, 1j], [0, 2]])
        I = sample_currents(CurrentModel(kind="colored", coloring=C), 3, 60000, 3)
        S = I @ I.conj().T / I.shape[1]
        target = C @ C.conj().T
        assert np.linalg.norm(S - target) / np.linalg.norm(target) <= 0.05

    def test_invalid_dimensions(self):
        with pytest.raises(DataError):
            sample_currents(CurrentModel(), 0, 5, 0)


class TestSolveVoltages:
    def test_invertible_residual(self):
        Y = build_admittance(random_radial_network(12, seed=0)).entries
        I = crandn(np.random.default_rng(0), 12, 20)
        V = solve_voltages(Y, I)
        assert np.linalg.norm(Y @ V - I) / np.linalg.norm(I) <= 1e-10

    def test_singular_balanced(self):
        Y = build_admittance(random_radial_network(8, seed=1, shunts=False)).entries
        I = crandn(np.random.default_rng(1), 8, 10)
        I -= I.mean(0)
        V = solve_voltages(Y, I)
        assert np.linalg.norm(Y @ V - I) <= 1e-8 * np.linalg.norm(I)
        assert np.abs(V.sum(0)).max() <= 1e-10 * np.abs(V).max()

    def test_singular_unbalanced_rejected(self):
        Y = build_admittance(random_radial_network(4, seed=1, shunts=False)).entries
        with pytest.raises(DataError):
            solve_voltages(Y, np.ones(4))

    def test_two_bus_cramer_oracle(self):
        Y = _two_bus()
        I = np.array([1, -1 + 0.1j])
        det = Y[0, 0] * Y[1, 1] - Y[0, 1] * Y[1, 0]
        oracle = np.array([Y[1, 1] * I[0] - Y[0, 1] * I[1], Y[0, 0] * I[1] - Y[1, 0] * I[0]]) / det
        np.testing.assert_allclose(solve_voltages(Y, I), oracle, rtol=1e-13)

    def test_dimension_mismatch(self):
        with pytest.raises(DataError):
            solve_voltages(np.eye(3), np.ones((2, 4)))


class TestAddNoise:
    def test_zero_sigma_identity(self):
        X = crandn(np.random.default_rng(0), 3, 4)
        np.testing.assert_array_equal(add_noise(X, 0.0, seed=1), X)

    def test_percent_level_and_circularity(self):
        X = 1.0 + 0.05 * crandn(np.random.default_rng(0), 20, 10000)
        target = 0.01 / 100 * np.mean(np.abs(X))
        eps = add_noise(X, 0.01, seed=5, mode="percent") - X
        assert abs(np.sqrt(np.mean(np.abs(eps) ** 2)) / target - 1) <= 0.05
        assert abs(np.std(eps.real) / (target / np.sqrt(2)) - 1) <= 0.05
        # pseudo-covariance of a circular variable vanishes
        assert abs(np.mean(eps * eps)) <= 0.05 * target**2

    def test_negative_sigma(self):
        with pytest.raises(ValueError):
            add_noise(np.ones((2, 2)), -1.0, seed=0)


class TestCenter:
    def _ds(self, V, I):
        return PhasorDataset(V_meas=V, I_meas=I)

    def test_idempotent(self):
        rng = np.random.default_rng(0)
        once = center(self._ds(crandn(rng, 4, 30), crandn(rng, 4, 30)))
        twice = center(once)
        np.testing.assert_allclose(twice.V_meas, once.V_meas, atol=1e-14)
        assert twice.centered

    def test_constant_columns_vanish(self):
        V = np.tile(np.array([[1 + 2j], [3.0], [-1j]]), (1, 6))
        out = center(self._ds(V, V))
        assert np.abs(out.V_meas).max() == 0

    def test_row_means(self):
        rng = np.random.default_rng(1)
        out = center(self._ds(5 + crandn(rng, 6, 100), crandn(rng, 6, 100)))
        assert np.abs(out.V_meas.mean(1)).max() <= 1e-12

    def test_needs_two_samples(self):
        with pytest.raises(DataError):
            center(self._ds(np.ones((2, 1)), np.ones((2, 1))))


class TestPowerLoss:
    def test_zero_lambda(self):
        assert complex_power_loss(np.ones(3), np.zeros(3)) == 0

    def test_two_bus_direct_oracle(self):
        Y = _two_bus()
        W, lam = spectral_decompose(Y)
        V = solve_voltages(Y, np.array([0.3 - 0.2j, -0.1 + 0.4j]))
        I = Y @ V
        loss = complex_power_loss(W.conj().T @ V, lam)
        direct = np.vdot(I, V)
        assert abs(loss - direct) <= 1e-10 * abs(direct)

    @given(st.complex_numbers(max_magnitude=100, allow_nan=False, allow_infinity=False))
    def test_homogeneous(self, c):
        nu = np.array([1 + 1j, -0.5, 2j])
        lam = np.array([0.0, 1 - 1j, 3 - 2j])
        base = complex_power_loss(nu, lam)
        assert complex_power_loss(c * nu, lam) == pytest.approx(abs(c) ** 2 * base, rel=1e-12, abs=1e-300)


class TestGenerateDataset:
    @pytest.mark.parametrize("shunts", [True, False])
    def test_clean_model_holds(self, shunts):
        Y = build_admittance(random_radial_network(10, seed=0, shunts=shunts)).entries
        ds = generate_dataset(Y, CurrentModel(sigma=0.03, balanced=True), 200, 4, slack_std=0.01)
        assert np.linalg.norm(Y @ ds.V_clean - ds.I_clean) <= 1e-8 * np.linalg.norm(ds.I_clean)

    def test_deterministic(self):
        Y = build_admittance(random_radial_network(6, seed=0)).entries
        m = CurrentModel(sigma=0.03, balanced=True)
        a = generate_dataset(Y, m, 50, 8, slack_std=0.01)
        b = generate_dataset(Y, m, 50, 8, slack_std=0.01)
        np.testing.assert_array_equal(a.V_meas, b.V_meas)
        np.testing.assert_array_equal(a.I_meas, b.I_meas)

    @given(st.integers(0, 10**6), st.integers(2, 12))
    def test_noise_free_ols_exact(self, seed, n):
        Y = build_admittance(random_radial_network(n, seed=seed)).entries
        ds = generate_dataset(Y, CurrentModel(sigma=0.03), 3 * n, seed, sigma_v=0, sigma_i=0)
        assert relative_frobenius_error(ols_estimate(ds), Y) <= 1e-8

    def test_block_average(self):
        Y = build_admittance(random_radial_network(4, seed=0)).entries
        ds = generate_dataset(Y, CurrentModel(sigma=0.03), 10, 1, sigma_v=0.01, sigma_i=0.01)
        avg = block_average(ds, 3)
        assert avg.N == 3
        np.testing.assert_allclose(avg.V_meas[:, 1], ds.V_meas[:, 3:6].mean(1))
        assert avg.sigma_v == pytest.approx(ds.sigma_v / np.sqrt(3))


def test_derive_seed_distinct_streams():
    assert derive_seed(1, 0) != derive_seed(1, 1) != derive_seed(2, 0)
    assert derive_seed(3, 7) == derive_seed(3, 7)
