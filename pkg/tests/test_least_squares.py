import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from sklearn.exceptions import ConvergenceWarning

from gridspect.estimators import (
    build_structure_maps,
    constrained_ls,
    lasso_alpha_max,
    lasso_estimate,
    ols_estimate,
    postfilter,
    wiener_filter,
)
from gridspect import joint_covariance
from gridspect.exceptions import RankDeficiencyError
from gridspect.metrics import relative_frobenius_error

from conftest import crandn, noise_free, random_laplacian


def kronecker_oracle(V, I):
    """Least squares over the reduced parameters through an explicit (V^T kron I_n) D R system."""
    n = V.shape[0]
    m = build_structure_maps(n)
    A = np.kron(V.T, np.eye(n)) @ (m.D @ m.R).toarray()
    x = np.linalg.lstsq(A, I.reshape(-1, order="F"), rcond=None)[0]
    Y = np.zeros((n, n), dtype=complex)
    k = 0
    for j in range(n):
        for i in range(j + 1, n):
            Y[i, j] = Y[j, i] = x[k]
            k += 1
    np.fill_diagonal(Y, -Y.sum(1))
    return Y


def _instance(seed, n, N, noise=0.1):
    rng = np.random.default_rng(seed)
    Y = random_laplacian(rng, n)
    V = crandn(rng, n, N)
    return Y, V, Y @ V + noise * crandn(rng, n, N)


class TestOLS:
    def test_noise_free(self):
        Y, ds = noise_free(10, 30)
        assert relative_frobenius_error(ols_estimate(ds), Y) <= 1e-8

    def test_equals_wiener_on_centered_samples(self):
        _, V, I = _instance(0, 5, 40)
        V = V - V.mean(1, keepdims=True)
        I = I - I.mean(1, keepdims=True)
        W = wiener_filter(joint_covariance(I, V)).Y
        O = ols_estimate((V, I))
        assert np.linalg.norm(W - O) <= 1e-8 * np.linalg.norm(O)

    def test_square_oracle(self):
        rng = np.random.default_rng(1)
        V = np.eye(3) + 0.2 * crandn(rng, 3, 3)
        I = crandn(rng, 3, 3)
        np.testing.assert_allclose(ols_estimate((V, I)), I @ np.linalg.inv(V), rtol=1e-10)

    def test_rank_deficient(self):
        V = np.ones((3, 10), dtype=complex)
        with pytest.raises(RankDeficiencyError) as info:
            ols_estimate((V, V))
        assert info.value.rank == 1 and info.value.required == 3

    def test_too_few_samples(self):
        with pytest.raises(RankDeficiencyError):
            ols_estimate((np.ones((4, 2)), np.ones((4, 2))))


class TestLasso:
    def test_alpha_zero_is_ols(self):
        _, V, I = _instance(2, 4, 30)
        # the default objective-change stop leaves ~1e-6 in the iterate; tighten it here
        est = lasso_estimate((V, I), 0.0, tol=1e-13)
        np.testing.assert_allclose(est, ols_estimate((V, I)), atol=1e-6)

    def test_large_alpha_zero(self):
        _, V, I = _instance(3, 4, 30)
        a = lasso_alpha_max((V, I))
        assert np.abs(lasso_estimate((V, I), 1.01 * a)).max() == 0
        assert np.abs(lasso_estimate((V, I), 0.5 * a)).max() > 0

    def test_convex_solver_oracle(self):
        cp = pytest.importorskip("cvxpy")
        _, V, I = _instance(4, 3, 12, noise=0.5)
        alpha = 0.1 * lasso_alpha_max((V, I))
        X = cp.Variable((3, 3), complex=True)
        prob = cp.Problem(cp.Minimize(cp.sum_squares(I - X @ V) + alpha * cp.sum(cp.abs(X))))
        prob.solve()
        res = lasso_estimate((V, I), alpha, return_info=True)
        assert res.converged
        obj = np.linalg.norm(I - res.Y @ V) ** 2 + alpha * np.abs(res.Y).sum()
        assert obj <= prob.value + 1e-8 * max(1.0, abs(prob.value))

    def test_nonconvergence_flag(self):
        _, V, I = _instance(5, 4, 30)
        with pytest.warns(ConvergenceWarning):
            res = lasso_estimate((V, I), 1.0, max_iter=2, return_info=True)
        assert not res.converged

    def test_negative_alpha(self):
        with pytest.raises(ValueError):
            lasso_estimate((np.eye(2), np.eye(2)), -1.0)


class TestConstrainedLS:
    @given(st.integers(0, 10**6), st.integers(2, 5), st.integers(0, 6))
    def test_kronecker_method_matches_oracle(self, seed, n, extra):
        _, V, I = _instance(seed, n, n + extra)
        out = constrained_ls((V, I), method="kronecker")
        ref = kronecker_oracle(V, I)
        assert np.linalg.norm(out - ref) <= 1e-8 * np.linalg.norm(ref)

    @given(st.integers(0, 10**6), st.integers(2, 5))
    def test_postfilter_method_composes(self, seed, n):
        _, V, I = _instance(seed, n, 3 * n)
        out = constrained_ls((V, I))
        np.testing.assert_array_equal(out, postfilter(ols_estimate((V, I))))

    def test_methods_agree_for_isotropic_voltages(self):
        rng = np.random.default_rng(6)
        Q, _ = np.linalg.qr(crandn(rng, 8, 4))
        V = 2.0 * Q.conj().T  # V V^H = 4 I
        I = crandn(rng, 4, 8)
        a = constrained_ls((V, I))
        b = constrained_ls((V, I), method="kronecker")
        assert np.linalg.norm(a - b) <= 1e-10 * np.linalg.norm(b)

    def test_methods_differ_in_general(self):
        _, V, I = _instance(7, 4, 12, noise=1.0)
        a = constrained_ls((V, I))
        b = constrained_ls((V, I), method="kronecker")
        assert np.linalg.norm(a - b) > 1e-3 * np.linalg.norm(b)
        # the direct solve attains the smaller residual
        assert np.linalg.norm(I - b @ V) < np.linalg.norm(I - a @ V)

    def test_noise_free_shunt_free(self):
        Y, ds = noise_free(8, 40, shunts=False)
        for method in ("postfilter", "kronecker"):
            assert relative_frobenius_error(constrained_ls(ds, method=method), Y) <= 1e-8

    def test_constraints_hold(self):
        _, V, I = _instance(8, 5, 20)
        out = constrained_ls((V, I))
        np.testing.assert_array_equal(out, out.T)
        assert np.abs(out.sum(1)).max() <= 1e-12 * np.abs(out).max()

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            constrained_ls((np.eye(2), np.eye(2)), method="qr")
