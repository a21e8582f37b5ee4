"""Duplication/elimination maps and the Laplacian-structure postfilter.

Vectorization is column-major throughout: ``vec`` stacks columns, ``vech``
stacks the lower triangle column by column, ``vech_rs`` keeps only the
strictly-lower entries (the diagonal follows from zero row sums).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from sklearn.base import BaseEstimator, TransformerMixin, clone
from sklearn.utils.validation import check_is_fitted

from .._validation import check_square
from ..exceptions import DataError
from ._base import AdmittanceEstimator

__all__ = [
    "StructureMaps",
    "build_structure_maps",
    "vech",
    "vech_rs",
    "from_vech_rs",
    "postfilter",
    "pinv_factorization_gap",
    "LaplacianPostfilter",
    "Postfiltered",
]


def _lower_pairs(n, strict):
    off = 1 if strict else 0
    return [(i, j) for j in range(n) for i in range(j + off, n)]


def vech(S):
    S = np.asarray(S)
    rows, cols = zip(*_lower_pairs(S.shape[0], strict=False))
    return S[list(rows), list(cols)]


def vech_rs(Y):
    Y = np.asarray(Y)
    if Y.shape[0] < 2:
        return Y[:0, 0]
    rows, cols = zip(*_lower_pairs(Y.shape[0], strict=True))
    return Y[list(rows), list(cols)]


def from_vech_rs(v, n):
    """Symmetric zero-row-sum matrix with strictly-lower entries ``v``."""
    v = np.asarray(v)
    Y = np.zeros((n, n), dtype=v.dtype)
    if n > 1:
        rows, cols = map(list, zip(*_lower_pairs(n, strict=True)))
        Y[rows, cols] = v
        Y[cols, rows] = v
    Y[np.diag_indices(n)] = -Y.sum(axis=1)
    return Y


@dataclass(frozen=True)
class StructureMaps:
    """Duplication map ``D``, diagonal-elimination map ``R`` and postfilter ``P``.

    ``D`` and ``R`` are sparse; ``P = (D R)^+`` is dense ``n_r x n^2``.
    """

    n: int
    D: sp.csr_matrix
    R: sp.csr_matrix
    P: np.ndarray

    @property
    def n_d(self):
        return self.n * (self.n + 1) // 2

    @property
    def n_r(self):
        return self.n * (self.n - 1) // 2


@lru_cache(maxsize=16)
def build_structure_maps(n):
    """Construct ``D``, ``R`` and the postfilter map for ``n`` buses.

    ``D R`` has Gram matrix ``2 I + K^T K`` (``K`` sums off-diagonals into
    rows) whose condition number is at most ``n``, so its Cholesky factor
    gives the pseudoinverse stably without forming an SVD of the
    ``n^2 x n_r`` product.
    """
    n = int(n)
    if n < 2:
        raise ValueError("structure maps need n >= 2")
    full = _lower_pairs(n, strict=False)
    pos = {p: k for k, p in enumerate(full)}
    n_d = len(full)
    rows, cols = [], []
    for k, (i, j) in enumerate(full):
        rows.append(i + j * n)
        cols.append(k)
        if i != j:
            rows.append(j + i * n)
            cols.append(k)
    D = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n * n, n_d))

    strict = _lower_pairs(n, strict=True)
    rows, cols, vals = [], [], []
    for k, (i, j) in enumerate(strict):
        rows += [pos[(i, j)], pos[(i, i)], pos[(j, j)]]
        cols += [k, k, k]
        vals += [1.0, -1.0, -1.0]
    R = sp.csr_matrix((vals, (rows, cols)), shape=(n_d, len(strict)))

    DR = (D @ R).tocsc()
    gram = (DR.T @ DR).toarray()
    chol = sla.cho_factor(gram, lower=True)
    P = sla.cho_solve(chol, DR.T.toarray())
    P.setflags(write=False)
    return StructureMaps(n=n, D=D, R=R, P=P)


def postfilter(Y_bar, maps=None):
    """Closest symmetric zero-row-sum matrix to ``Y_bar`` in Frobenius norm."""
    Y_bar = check_square(Y_bar, "Y_bar")
    n = Y_bar.shape[0]
    if maps is None:
        maps = build_structure_maps(n)
    if maps.n != n:
        raise DataError(f"structure maps are for n={maps.n}, matrix has n={n}")
    off = maps.P @ Y_bar.reshape(-1, order="F")
    return from_vech_rs(off, n)


def pinv_factorization_gap(maps):
    """``||(DR)^+ - R^+ D^+||_F / ||(DR)^+||_F``.

    The product rule for pseudoinverses needs ``R`` to have full row rank,
    which it does not, so the gap is generally nonzero.
    """
    D = maps.D.toarray()
    R = maps.R.toarray()
    alt = np.linalg.pinv(R) @ np.linalg.pinv(D)
    return float(np.linalg.norm(maps.P - alt) / np.linalg.norm(maps.P))


class LaplacianPostfilter(TransformerMixin, BaseEstimator):
    """Transformer projecting admittance estimates onto Laplacian structure.

    ``fit`` reads the bus count from a square matrix (or a stack of them)
    and ``transform`` applies :func:`postfilter`.
    """

    def fit(self, Y, y=None):
        Y = np.asarray(Y)
        self.n_buses_ = Y.shape[-1]
        self.maps_ = build_structure_maps(self.n_buses_)
        return self

    def transform(self, Y):
        check_is_fitted(self, "maps_")
        Y = np.asarray(Y)
        if Y.ndim == 2:
            return postfilter(Y, self.maps_)
        return np.stack([postfilter(y, self.maps_) for y in Y])


class Postfiltered(AdmittanceEstimator):
    """Meta-estimator applying the postfilter to another estimator's output."""

    def __init__(self, estimator, center=True):
        self.estimator = estimator
        self.center = center

    def _estimate(self, V, I):
        inner = clone(self.estimator)
        inner.fit(V.T, I.T)
        self.estimator_ = inner
        self.unfiltered_ = inner.admittance_
        return postfilter(inner.admittance_)
