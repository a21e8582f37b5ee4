"""Least-squares baselines: ordinary, l1-regularized and Laplacian-constrained."""

from __future__ import annotations

import warnings
from typing import NamedTuple

import numpy as np
import scipy.linalg as sla
from sklearn.exceptions import ConvergenceWarning

from .._validation import dataset_arrays
from ..exceptions import RankDeficiencyError
from ._base import AdmittanceEstimator
from .structure import build_structure_maps, from_vech_rs, postfilter

__all__ = [
    "ols_estimate",
    "lasso_estimate",
    "constrained_ls",
    "LassoResult",
    "OLSEstimator",
    "LassoEstimator",
    "ConstrainedLeastSquares",
]


def ols_estimate(dataset):
    """Unconstrained least squares ``argmin_Y ||I - Y V||_F``.

    Solved through an SVD-based least-squares routine on ``V^T Y^T = I^T``
    rather than the normal equations.

    Raises
    ------
    RankDeficiencyError
        If the voltage samples have numerical rank below ``n``.
    """
    V, I = dataset_arrays(dataset)
    n, N = V.shape
    if N < n:
        raise RankDeficiencyError(f"need N >= n samples, got N={N} < n={n}", rank=N, required=n)
    Yt, _, rank, _ = sla.lstsq(V.T, I.T, lapack_driver="gelsd")
    if rank < n:
        raise RankDeficiencyError(
            f"voltage samples have numerical rank {rank} < {n}", rank=int(rank), required=n
        )
    return Yt.T


class LassoResult(NamedTuple):
    Y: np.ndarray
    n_iter: int
    converged: bool
    objective: float


def _soft_threshold(Z, t):
    mag = np.abs(Z)
    scale = np.maximum(1.0 - t / np.maximum(mag, 1e-300), 0.0)
    return Z * scale


def lasso_alpha_max(dataset):
    """Smallest ``alpha`` for which the all-zero matrix is optimal."""
    V, I = dataset_arrays(dataset)
    return float(2.0 * np.abs(I @ V.conj().T).max())


def lasso_estimate(dataset, alpha, max_iter=10000, tol=1e-9, return_info=False):
    """``argmin_Y ||I - Y V||_F^2 + alpha * sum |Y_ij|`` by accelerated proximal gradient.

    Gradient steps use ``1/L`` with ``L = 2 ||V V^H||_2``; the prox is
    complex soft-thresholding. Momentum is reset whenever the objective
    increases. Stops when the relative objective change drops below
    ``tol`` or after ``max_iter`` iterations (the best iterate is returned
    with a ConvergenceWarning).
    """
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    V, I = dataset_arrays(dataset)
    n, N = V.shape
    G = V @ V.conj().T
    C = I @ V.conj().T
    c0 = float(np.sum(np.abs(I) ** 2))
    lip = 2.0 * np.linalg.norm(G, 2)
    if lip == 0:
        Y = np.zeros((n, n), dtype=complex)
        return LassoResult(Y, 0, True, c0) if return_info else Y

    def objective(Y):
        fit = np.real(np.sum((Y @ G) * Y.conj())) - 2.0 * np.real(np.sum(Y * C.conj())) + c0
        return max(fit, 0.0) + alpha * float(np.abs(Y).sum())

    Y = np.zeros((n, n), dtype=complex)
    Z = Y
    t = 1.0
    f_prev = objective(Y)
    best, f_best = Y, f_prev
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        grad = 2.0 * (Z @ G - C)
        Y_new = _soft_threshold(Z - grad / lip, alpha / lip)
        f_new = objective(Y_new)
        if f_new > f_prev:
            if Z is Y:
                # a plain proximal step no longer descends: stalled at round-off level
                converged = True
                break
            # restart momentum from the last accepted iterate
            t = 1.0
            Z = Y
            continue
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        Z = Y_new + ((t - 1.0) / t_new) * (Y_new - Y)
        Y, t = Y_new, t_new
        if f_new < f_best:
            best, f_best = Y_new, f_new
        if abs(f_prev - f_new) <= tol * max(abs(f_new), np.finfo(float).tiny):
            converged = True
            f_prev = f_new
            break
        f_prev = f_new
    if not converged:
        warnings.warn(
            f"lasso did not converge in {max_iter} iterations", ConvergenceWarning, stacklevel=2
        )
    if return_info:
        return LassoResult(best, it, converged, f_best)
    return best


def constrained_ls(dataset, maps=None, method="postfilter"):
    """Least squares restricted to symmetric zero-row-sum matrices.

    ``method='postfilter'`` projects the unconstrained solution onto the
    structured set. ``method='kronecker'`` minimizes ``||I - Y V||_F`` over
    the structured set directly through its ``n_r x n_r`` normal equations;
    the two agree when ``V V^H`` is a multiple of the identity (including
    noise-free data from a shunt-free network) but not in general.
    """
    V, I = dataset_arrays(dataset)
    n = V.shape[0]
    if maps is None:
        maps = build_structure_maps(n)
    if method == "postfilter":
        return postfilter(ols_estimate((V, I)), maps)
    if method == "kronecker":
        return _constrained_ls_kronecker(V, I, maps)
    raise ValueError(f"unknown method {method!r}")


def _constrained_ls_kronecker(V, I, maps):
    n, N = V.shape
    if N < n:
        raise RankDeficiencyError(f"need N >= n samples, got N={N} < n={n}", rank=N, required=n)
    DR = (maps.D @ maps.R).toarray()
    G = V @ V.conj().T
    # (V^T kron I)^H (V^T kron I) vec(E) = vec(E G), applied to each column of DR
    E = DR.T.reshape(-1, n, n).transpose(0, 2, 1)
    EG = (E @ G).transpose(0, 2, 1).reshape(DR.shape[1], n * n)
    H = DR.T @ EG.T
    rhs = DR.T @ (I @ V.conj().T).reshape(-1, order="F")
    off = sla.solve(H, rhs, assume_a="her")
    return from_vech_rs(off, n)


class OLSEstimator(AdmittanceEstimator):
    """Ordinary least squares admittance estimate."""

    def __init__(self, center=True):
        self.center = center

    def _estimate(self, V, I):
        return ols_estimate((V, I))


class LassoEstimator(AdmittanceEstimator):
    """l1-regularized least squares.

    ``alpha=None`` uses ``alpha_ratio`` times the data-dependent
    ``alpha_max`` above which the estimate is identically zero.
    """

    def __init__(self, alpha=None, alpha_ratio=1e-3, max_iter=10000, tol=1e-9, center=True):
        self.alpha = alpha
        self.alpha_ratio = alpha_ratio
        self.max_iter = max_iter
        self.tol = tol
        self.center = center

    def _estimate(self, V, I):
        alpha = self.alpha
        if alpha is None:
            alpha = self.alpha_ratio * lasso_alpha_max((V, I))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ConvergenceWarning)
            res = lasso_estimate((V, I), alpha, self.max_iter, self.tol, return_info=True)
        if not res.converged:
            warnings.warn(
                f"lasso did not converge in {self.max_iter} iterations",
                ConvergenceWarning,
                stacklevel=3,
            )
        self.alpha_ = alpha
        self.n_iter_ = res.n_iter
        self.converged_ = res.converged
        self.objective_ = res.objective
        return res.Y


class ConstrainedLeastSquares(AdmittanceEstimator):
    """Laplacian-constrained least squares (see :func:`constrained_ls`)."""

    def __init__(self, method="postfilter", center=True):
        self.method = method
        self.center = center

    def _estimate(self, V, I):
        return constrained_ls((V, I), method=self.method)
