import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import minimize
from sklearn.exceptions import ConvergenceWarning

from gridspect import (
    CurrentModel,
    build_admittance,
    generate_dataset,
    make_constant_xr,
    random_radial_network,
    sample_covariance,
    spectral_decompose,
)
from gridspect.estimators import MapLambdaConfig, map_lambda_estimate, recover_eigenvectors
from gridspect.estimators.spectral import default_beta, lambda_update, map_objective, nu_update
from gridspect.metrics import basis_mismatch, relative_frobenius_error

from conftest import crandn


def _c(x):
    return x[0::2] + 1j * x[1::2]


def _r(z):
    out = np.empty(2 * z.size)
    out[0::2], out[1::2] = z.real.ravel(), z.imag.ravel()
    return out


def _random_problem(seed, n=3, N=4):
    rng = np.random.default_rng(seed)
    lam = crandn(rng, n)
    a = crandn(rng, n, N)
    b = lam[:, None] * a + 0.3 * crandn(rng, n, N)
    return a, b, float(rng.uniform(0.01, 1.0))


def _unitary(rng, n):
    Q, _ = np.linalg.qr(crandn(rng, n, n))
    return Q


class TestClosedForms:
    def test_scalar_first_order_condition(self):
        lam = lambda_update(np.array([[2 - 2j]]), np.array([[1.0 + 0j]]), 0.0)
        assert lam[0] == 2 - 2j

    @pytest.mark.parametrize("seed", range(50))
    def test_lambda_update_minimizes_subproblem(self, seed):
        a, b, beta = _random_problem(seed)
        nu = a + 0.1 * crandn(np.random.default_rng(seed + 1000), *a.shape)

        def f(x):
            lam = _c(x)
            return np.sum(np.abs(b - lam[:, None] * nu) ** 2) + beta * np.sum(np.abs(lam) ** 2)

        ref = _c(minimize(f, np.zeros(6), method="BFGS", options={"gtol": 1e-12}).x)
        np.testing.assert_allclose(lambda_update(b, nu, beta), ref, atol=1e-6)

    @pytest.mark.parametrize("seed", range(50))
    def test_nu_update_minimizes_subproblem(self, seed):
        a, b, _ = _random_problem(seed)
        lam = crandn(np.random.default_rng(seed + 2000), 3)

        def f(x):
            nu = _c(x).reshape(a.shape)
            return np.sum(np.abs(a - nu) ** 2) + np.sum(np.abs(b - lam[:, None] * nu) ** 2)

        ref = _c(minimize(f, np.zeros(2 * a.size), method="BFGS", options={"gtol": 1e-12}).x)
        np.testing.assert_allclose(nu_update(a, b, lam).ravel(), ref, atol=1e-6)


class TestIteration:
    @given(st.integers(0, 10**6), st.sampled_from(["profiled", "bcd"]))
    def test_objective_nonincreasing(self, seed, solver):
        rng = np.random.default_rng(seed)
        W = _unitary(rng, 4)
        V = crandn(rng, 4, 30)
        I = W @ (crandn(rng, 4)[:, None] * (W.conj().T @ V)) + 0.1 * crandn(rng, 4, 30)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ConvergenceWarning)
            res = map_lambda_estimate((V, I), W, MapLambdaConfig(beta=0.1, max_iters=200, solver=solver))
        h = res.history
        assert np.all(np.diff(h) <= 1e-12 * h[0])

    def test_history_matches_direct_objective(self):
        rng = np.random.default_rng(3)
        W = _unitary(rng, 3)
        V, I = crandn(rng, 3, 10), crandn(rng, 3, 10)
        res = map_lambda_estimate((V, I), W, MapLambdaConfig(beta=0.5, solver="bcd"))
        a, b = W.conj().T @ V, W.conj().T @ I
        nu = nu_update(a, b, res.lam)
        assert res.objective == pytest.approx(map_objective(a, b, nu, res.lam, 0.5), rel=1e-10)

    @pytest.mark.parametrize("seed", range(10))
    def test_profiled_equals_alternation(self, seed):
        rng = np.random.default_rng(seed)
        W = _unitary(rng, 3)
        V = crandn(rng, 3, 40)
        I = W @ (crandn(rng, 3)[:, None] * (W.conj().T @ V)) + 0.2 * crandn(rng, 3, 40)
        cfg = dict(beta=0.05, tol=1e-13, max_iters=200000)
        p = map_lambda_estimate((V, I), W, MapLambdaConfig(solver="profiled", **cfg))
        b = map_lambda_estimate((V, I), W, MapLambdaConfig(solver="bcd", **cfg))
        assert p.converged and b.converged
        np.testing.assert_allclose(p.lam, b.lam, atol=1e-8)
        assert p.n_iter <= b.n_iter

    @pytest.mark.parametrize("seed", range(10))
    def test_profiled_is_global_minimizer(self, seed):
        rng = np.random.default_rng(seed)
        a = crandn(rng, 1, 20)
        b = 30 * a + crandn(rng, 1, 20)
        beta = 1e-3

        def g(x):
            lam = complex(x[0], x[1])
            nu = (a + np.conj(lam) * b) / (1 + abs(lam) ** 2)
            return np.sum(np.abs(a - nu) ** 2) + np.sum(np.abs(b - lam * nu) ** 2) + beta * abs(lam) ** 2

        W = np.eye(1, dtype=complex)
        res = map_lambda_estimate((a, b), W, MapLambdaConfig(beta=beta))
        starts = [np.zeros(2), _r(res.lam), np.array([50.0, -50.0])]
        best = min((minimize(g, x0, method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-14}) for x0 in starts), key=lambda r: r.fun)
        assert g(_r(res.lam)) <= best.fun * (1 + 1e-9)

    def test_nonconvergence_flag(self):
        rng = np.random.default_rng(4)
        W = _unitary(rng, 3)
        V = crandn(rng, 3, 20)
        I = 50 * V
        with pytest.warns(ConvergenceWarning):
            res = map_lambda_estimate((V, I), W, MapLambdaConfig(beta=1e-6, solver="bcd", max_iters=3))
        assert not res.converged and res.n_iter == 3

    def test_rejects_non_unitary_basis(self):
        with pytest.raises(ValueError):
            map_lambda_estimate((np.ones((2, 3)), np.ones((2, 3))), 2 * np.eye(2))

    @pytest.mark.parametrize("kw", [dict(beta=0.0), dict(tol=0.0), dict(solver="newton"), dict(init="zeros")])
    def test_config_validation(self, kw):
        with pytest.raises(ValueError):
            MapLambdaConfig(**kw)

    def test_default_beta(self):
        assert default_beta(3e-4, 4e-4, 100) == pytest.approx(25e-8 / 100)
        assert default_beta(0.0, 0.0, 10) == 1e-30


class TestRecoverEigenvectors:
    def test_population_covariance(self):
        spec = make_constant_xr(random_radial_network(33, seed=1, shunts=False))
        Y = build_admittance(spec).entries
        W, lam = spectral_decompose(Y)
        inv = np.zeros_like(lam)
        inv[1:] = 1 / lam[1:]
        S_V = (W * (np.abs(inv) ** 2 * 0.03**2)) @ W.conj().T
        basis, ev = recover_eigenvectors(S_V, return_eigenvalues=True)
        assert basis_mismatch(basis.W, Y) <= 1e-8
        assert np.all(np.diff(ev) <= 0) and basis.lam.size == 0

    def test_non_normal_still_returns_basis(self):
        Y = build_admittance(random_radial_network(10, seed=2, shunts=False)).entries
        ds = generate_dataset(Y, CurrentModel(sigma=0.03, balanced=True), 2000, 1, sigma_v=0, sigma_i=0)
        W = recover_eigenvectors(sample_covariance(ds.V_clean)).W
        assert np.linalg.norm(W.conj().T @ W - np.eye(10)) <= 1e-10
        assert basis_mismatch(W, Y) > 1e-3


def test_constant_xr_33_bus_error_small_and_decreasing():
    spec = make_constant_xr(random_radial_network(33, seed=33, shunts=False))
    Y = build_admittance(spec).entries
    model = CurrentModel(sigma=0.03, balanced=True)
    errs = []
    for N in (10080, 40320):
        ds = generate_dataset(Y, model, N, 11, sigma_v=0.01, sigma_i=0.01, slack_std=0.005)
        W = recover_eigenvectors(sample_covariance(ds.V_meas)).W
        res = map_lambda_estimate(ds, W)
        errs.append(relative_frobenius_error(res.Y, Y))
    assert errs[0] <= 0.05
    assert errs[1] < errs[0]
