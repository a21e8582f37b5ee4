"""Accuracy and diagonalization metrics."""

import numpy as np

__all__ = ["relative_frobenius_error", "ndiag", "dist_w", "basis_mismatch"]


def relative_frobenius_error(Y_hat, Y_true):
    """``||Y_hat - Y_true||_F / ||Y_true||_F``."""
    Y_hat = np.asarray(Y_hat)
    Y_true = np.asarray(Y_true)
    if Y_hat.shape != Y_true.shape:
        raise ValueError(f"shape mismatch: {Y_hat.shape} vs {Y_true.shape}")
    ref = np.linalg.norm(Y_true)
    if ref == 0:
        raise ValueError("reference matrix is zero")
    return float(np.linalg.norm(Y_hat - Y_true) / ref)


def ndiag(A):
    """Copy of ``A`` with its diagonal set to zero."""
    out = np.array(A, copy=True)
    np.fill_diagonal(out, 0)
    return out


def dist_w(A, W):
    """Relative off-diagonal mass of ``W^H A W``.

    Zero exactly when the columns of ``W`` diagonalize ``A``.
    """
    A = np.asarray(A)
    if not np.any(A):
        raise ValueError("dist_w of a zero matrix is undefined")
    M = W.conj().T @ A @ W
    return float(np.linalg.norm(ndiag(M)) / np.linalg.norm(M))


def basis_mismatch(W_est, Y):
    """How far ``W_est`` is from an eigenbasis of ``Y``: ``dist_w(Y, W_est)``.

    Invariant to column phases, permutations and rotations inside
    eigenspaces of ``Y``, and weighted by eigenvalue separation, which is
    what matters when ``Y`` is rebuilt as ``W diag(lam) W^H``.
    """
    return dist_w(Y, W_est)
