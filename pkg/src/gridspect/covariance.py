"""Sample covariances, the joint current/voltage covariance and its truncated eigenbasis."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DataError

__all__ = [
    "JointCovariance",
    "TruncatedBasis",
    "sample_covariance",
    "joint_covariance",
    "truncated_eigenbasis",
    "condition_number",
]


def sample_covariance(X):
    """``(1/N) Xc Xc^H`` where ``Xc`` is ``X`` with row means removed."""
    X = np.asarray(X, dtype=complex)
    if X.ndim != 2:
        raise DataError(f"expected an n x N sample matrix, got shape {X.shape}")
    N = X.shape[1]
    if N < 2:
        raise DataError("covariance needs at least two samples")
    Xc = X - X.mean(axis=1, keepdims=True)
    S = Xc @ Xc.conj().T / N
    return 0.5 * (S + S.conj().T)


@dataclass(frozen=True)
class JointCovariance:
    """Covariance of the stacked vector ``Z = (I, V)``.

    Block layout is ``[[Sigma_I, Sigma_IV], [Sigma_IV^H, Sigma_V]]``.
    """

    sigma_Z: np.ndarray

    @property
    def n(self):
        return self.sigma_Z.shape[0] // 2

    @property
    def sigma_I(self):
        n = self.n
        return self.sigma_Z[:n, :n]

    @property
    def sigma_V(self):
        n = self.n
        return self.sigma_Z[n:, n:]

    @property
    def sigma_IV(self):
        n = self.n
        return self.sigma_Z[:n, n:]


def joint_covariance(I, V):
    I = np.asarray(I, dtype=complex)
    V = np.asarray(V, dtype=complex)
    if I.shape != V.shape:
        raise DataError(f"current samples {I.shape} and voltage samples {V.shape} differ")
    return JointCovariance(sample_covariance(np.vstack([I, V])))


@dataclass(frozen=True)
class TruncatedBasis:
    """Top-``L`` eigenvectors of a joint covariance, split into current/voltage rows."""

    X_IL: np.ndarray
    X_VL: np.ndarray
    S_ZL: np.ndarray
    rho_L: float
    eigenvalues: np.ndarray

    @property
    def L(self):
        return self.X_IL.shape[1]


def truncated_eigenbasis(jc, L):
    """Keep the ``L`` largest eigenpairs of ``jc.sigma_Z``.

    ``L`` may range over ``1..2n``; values above ``n`` are accepted so the
    full-retention limit can be examined, although the filter built from
    them is rank deficient.
    """
    n = jc.n
    L = int(L)
    if not 1 <= L <= 2 * n:
        raise ValueError(f"truncation order L={L} outside 1..{2 * n}")
    w, X = np.linalg.eigh(jc.sigma_Z)
    w, X = w[::-1], X[:, ::-1]
    total = float(np.sum(w))
    kept = w[:L]
    rho = max(total - float(np.sum(kept)), 0.0)
    return TruncatedBasis(
        X_IL=X[:n, :L],
        X_VL=X[n:, :L],
        S_ZL=kept.copy(),
        rho_L=rho,
        eigenvalues=w.copy(),
    )


def condition_number(A):
    """Ratio of extreme singular values; ``inf`` when the smallest is below 1e-300."""
    A = np.asarray(A)
    s = np.linalg.svd(A, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        raise ValueError("condition number of a zero matrix is undefined")
    if s[-1] <= 1e-300:
        return float("inf")
    return float(s[0] / s[-1])
