"""Wiener filter and its well-conditioned truncated approximation."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
import scipy.linalg as sla

from ..covariance import condition_number, joint_covariance, truncated_eigenbasis
from ..exceptions import ConditioningError, RankDeficiencyError
from ._base import AdmittanceEstimator

__all__ = [
    "WienerResult",
    "wiener_filter",
    "wcwf_estimate",
    "WienerFilter",
    "WellConditionedWienerFilter",
]

DEFAULT_KAPPA_MAX = 1e14


class WienerResult(NamedTuple):
    Y: np.ndarray
    mmse: np.ndarray
    kappa: float


def wiener_filter(jc, kappa_max=DEFAULT_KAPPA_MAX):
    """``Sigma_IV Sigma_V^{-1}`` and the MMSE matrix (Schur complement of ``Sigma_V``).

    Raises
    ------
    ConditioningError
        If ``kappa(Sigma_V)`` exceeds ``kappa_max``; the truncated filter
        :func:`wcwf_estimate` avoids inverting ``Sigma_V``.
    """
    S_V = jc.sigma_V
    kappa = condition_number(S_V)
    if not kappa <= kappa_max:
        raise ConditioningError(
            f"kappa(Sigma_V) = {kappa:.3e} exceeds {kappa_max:.1e}; use the truncated filter",
            kappa=kappa,
            ceiling=kappa_max,
        )
    S_IV = jc.sigma_IV
    # Y Sigma_V = Sigma_IV  <=>  Sigma_V Y^H = Sigma_IV^H
    Y = sla.solve(S_V, S_IV.conj().T, assume_a="her").conj().T
    mmse = jc.sigma_I - Y @ S_IV.conj().T
    mmse = 0.5 * (mmse + mmse.conj().T)
    return WienerResult(Y, mmse, kappa)


def wcwf_estimate(tb, rank_rtol=1e-12):
    """``X_IL (X_VL^H X_VL)^{-1} X_VL^H``, inverting only an ``L x L`` matrix.

    Raises
    ------
    RankDeficiencyError
        If ``X_VL`` is numerically rank deficient; ``required`` on the
        exception holds the largest usable ``L``.
    """
    X_IL, X_VL = tb.X_IL, tb.X_VL
    L = X_VL.shape[1]
    s = np.linalg.svd(X_VL, compute_uv=False)
    rank = int(np.sum(s > rank_rtol * s[0])) if s.size and s[0] > 0 else 0
    if rank < L:
        raise RankDeficiencyError(
            f"X_VL has rank {rank} < L={L}; reduce L to at most {rank}",
            rank=rank,
            required=rank,
        )
    G = X_VL.conj().T @ X_VL
    return X_IL @ sla.solve(G, X_VL.conj().T, assume_a="her")


class WienerFilter(AdmittanceEstimator):
    """Sample Wiener filter ``Sigma_IV Sigma_V^{-1}``."""

    def __init__(self, kappa_max=DEFAULT_KAPPA_MAX, center=True):
        self.kappa_max = kappa_max
        self.center = center

    def _estimate(self, V, I):
        res = wiener_filter(joint_covariance(I, V), self.kappa_max)
        self.mmse_ = res.mmse
        self.kappa_sigma_V_ = res.kappa
        return res.Y


class WellConditionedWienerFilter(AdmittanceEstimator):
    """Truncated-eigenbasis Wiener filter; ``L=None`` keeps ``n`` eigenpairs."""

    def __init__(self, L=None, center=True):
        self.L = L
        self.center = center

    def _estimate(self, V, I):
        n = V.shape[0]
        L = n if self.L is None else int(self.L)
        tb = truncated_eigenbasis(joint_covariance(I, V), L)
        self.truncation_loss_ = tb.rho_L
        self.kappa_XVL_ = condition_number(tb.X_VL.conj().T @ tb.X_VL)
        return wcwf_estimate(tb)
