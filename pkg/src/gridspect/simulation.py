"""Synthetic phasor data: current injections, exact voltages, noisy measurements.

Every random draw is derived from an explicit integer seed. Samples are
generated in fixed-size column blocks, each with its own generator seeded
from ``(seed, block index)``, so results do not depend on how blocks are
scheduled.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .exceptions import DataError

__all__ = [
    "CurrentModel",
    "PhasorDataset",
    "sample_currents",
    "solve_voltages",
    "add_noise",
    "noise_std",
    "center",
    "block_average",
    "complex_power_loss",
    "generate_dataset",
    "derive_seed",
]

BLOCK_SIZE = 1024

# Stream identifiers for derive_seed; fixed so datasets stay reproducible.
_STREAM_CURRENTS = 1
_STREAM_SLACK = 2
_STREAM_NOISE_V = 3
_STREAM_NOISE_I = 4


def derive_seed(seed, *keys):
    """Deterministic 63-bit child seed from a master seed and integer keys."""
    ss = np.random.SeedSequence([int(seed), *[int(k) for k in keys]])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def _complex_normal(rng, shape):
    """Standard circular complex Gaussian (unit variance per entry)."""
    out = rng.standard_normal(shape + (2,))
    return (out[..., 0] + 1j * out[..., 1]) * np.sqrt(0.5)


def _blocked_normal(seed, n, N):
    out = np.empty((n, N), dtype=complex)
    for b, start in enumerate(range(0, N, BLOCK_SIZE)):
        stop = min(start + BLOCK_SIZE, N)
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), b]))
        out[:, start:stop] = _complex_normal(rng, (n, stop - start))
    return out


@dataclass(frozen=True)
class CurrentModel:
    """Statistical model of nodal current-injection fluctuations.

    ``kind='white'`` draws i.i.d. entries with per-bus std ``sigma``
    (scalar or length-n). ``kind='colored'`` applies the factor
    ``coloring`` (n x k) to standard white samples, giving covariance
    ``C C^H``. ``balanced`` projects every sample onto ``1^T x = 0``.
    """

    kind: str = "white"
    sigma: object = 1.0
    coloring: Optional[np.ndarray] = None
    balanced: bool = False

    def __post_init__(self):
        if self.kind not in ("white", "colored"):
            raise ValueError(f"unknown current model kind {self.kind!r}")
        if self.kind == "white":
            if np.any(np.asarray(self.sigma, dtype=float) <= 0):
                raise ValueError("white current model needs sigma > 0")
        else:
            if self.coloring is None:
                raise ValueError("colored current model needs a coloring factor")
            C = np.asarray(self.coloring, dtype=complex)
            if C.ndim != 2:
                raise ValueError("coloring factor must be a 2-D matrix")
            if np.linalg.matrix_rank(C) < min(C.shape[1], C.shape[0]):
                raise ValueError("coloring factor must have full column rank")
            object.__setattr__(self, "coloring", C)

    def covariance(self, n):
        """Population covariance of the generated samples."""
        if self.kind == "white":
            s = np.broadcast_to(np.asarray(self.sigma, dtype=float), (n,))
            cov = np.diag(s**2).astype(complex)
        else:
            C = self.coloring
            cov = C @ C.conj().T
        if self.balanced:
            P = np.eye(n) - np.ones((n, n)) / n
            cov = P @ cov @ P
        return cov


@dataclass(frozen=True)
class PhasorDataset:
    """Paired voltage/current phasor samples, one column per sample."""

    V_meas: np.ndarray
    I_meas: np.ndarray
    V_clean: Optional[np.ndarray] = None
    I_clean: Optional[np.ndarray] = None
    sigma_v: float = 0.0
    sigma_i: float = 0.0
    seed: Optional[int] = None
    centered: bool = False

    def __post_init__(self):
        shape = np.shape(self.V_meas)
        if len(shape) != 2:
            raise DataError(f"voltage samples must be a 2-D array, got shape {shape}")
        for name in ("V_meas", "I_meas", "V_clean", "I_clean"):
            arr = getattr(self, name)
            if arr is None:
                continue
            arr = np.asarray(arr, dtype=complex)
            if arr.shape != shape:
                raise DataError(f"{name} has shape {arr.shape}, expected {shape}")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n(self):
        return self.V_meas.shape[0]

    @property
    def N(self):
        return self.V_meas.shape[1]

    @property
    def has_clean(self):
        return self.V_clean is not None and self.I_clean is not None


def sample_currents(model, n, N, seed):
    """Draw ``N`` current-injection samples (an ``n x N`` complex array)."""
    if n < 1 or N < 1:
        raise DataError(f"invalid dimensions n={n}, N={N}")
    if model.kind == "white":
        s = np.broadcast_to(np.asarray(model.sigma, dtype=float), (n,))
        I = s[:, None] * _blocked_normal(seed, n, N)
    else:
        C = model.coloring
        if C.shape[0] != n:
            raise DataError(f"coloring factor has {C.shape[0]} rows, expected {n}")
        I = C @ _blocked_normal(seed, C.shape[1], N)
    if model.balanced:
        I = I - I.mean(axis=0, keepdims=True)
    return I


def _is_singular(Y, rtol=1e-12):
    s = np.linalg.svd(Y, compute_uv=False)
    return s[-1] <= rtol * s[0]


def solve_voltages(Y, I, alpha=0.0):
    """Voltages satisfying ``Y V = I`` for every column of ``I``.

    Returns ``Y^+ I + alpha 1``. For singular ``Y`` (no shunts) the
    injections must be balanced; ``alpha`` may be a scalar or one value
    per column. For invertible ``Y`` a nonzero ``alpha`` is rejected since
    it would break ``Y V = I``.
    """
    Y = np.asarray(Y, dtype=complex)
    I = np.asarray(I, dtype=complex)
    squeeze = I.ndim == 1
    if squeeze:
        I = I[:, None]
    n = Y.shape[0]
    if Y.shape != (n, n) or I.shape[0] != n:
        raise DataError(f"dimension mismatch: Y is {Y.shape}, I is {I.shape}")
    alpha = np.broadcast_to(np.asarray(alpha, dtype=complex), (I.shape[1],))
    if _is_singular(Y):
        col_norm = np.linalg.norm(I, axis=0)
        imbalance = np.abs(I.sum(axis=0))
        if np.any(imbalance > 1e-10 * np.maximum(col_norm, 1e-300) * np.sqrt(n)):
            raise DataError("admittance matrix is singular and the injections are not balanced")
        V = np.linalg.pinv(Y, rcond=1e-10) @ I + alpha[None, :]
    else:
        if np.any(alpha != 0):
            raise DataError("a nonzero voltage offset is only admissible for singular Y")
        V = np.linalg.solve(Y, I)
    return V[:, 0] if squeeze else V


def noise_std(X, sigma, mode="absolute"):
    """Absolute noise std; ``mode='percent'`` scales by the mean entry modulus."""
    if sigma < 0:
        raise ValueError("noise std must be nonnegative")
    if mode == "absolute":
        return float(sigma)
    if mode == "percent":
        return float(sigma) / 100.0 * float(np.mean(np.abs(X)))
    raise ValueError(f"unknown noise mode {mode!r}")


def add_noise(X, sigma, seed, mode="absolute"):
    """Add i.i.d. circular complex Gaussian noise with per-entry std ``sigma``."""
    X = np.asarray(X, dtype=complex)
    std = noise_std(X, sigma, mode)
    if std == 0:
        return X.copy()
    if X.ndim == 1:
        return X + std * _blocked_normal(seed, X.shape[0], 1)[:, 0]
    return X + std * _blocked_normal(seed, *X.shape)


def center(dataset):
    """Subtract per-bus sample means from measured (and clean) matrices."""
    if dataset.N < 2:
        raise DataError("centering needs at least two samples")

    def c(X):
        return None if X is None else X - X.mean(axis=1, keepdims=True)

    return replace(
        dataset,
        V_meas=c(dataset.V_meas),
        I_meas=c(dataset.I_meas),
        V_clean=c(dataset.V_clean),
        I_clean=c(dataset.I_clean),
        centered=True,
    )


def block_average(dataset, block):
    """Average consecutive groups of ``block`` samples (trailing remainder dropped).

    The recorded noise stds are divided by ``sqrt(block)``, which is exact
    for the i.i.d. noise model used here.
    """
    block = int(block)
    if block < 1:
        raise ValueError("block must be >= 1")
    K = dataset.N // block
    if K < 1:
        raise DataError(f"need at least {block} samples to average")

    def avg(X):
        if X is None:
            return None
        return X[:, : K * block].reshape(X.shape[0], K, block).mean(axis=2)

    return replace(
        dataset,
        V_meas=avg(dataset.V_meas),
        I_meas=avg(dataset.I_meas),
        V_clean=avg(dataset.V_clean),
        I_clean=avg(dataset.I_clean),
        sigma_v=dataset.sigma_v / np.sqrt(block),
        sigma_i=dataset.sigma_i / np.sqrt(block),
        centered=False,
    )


def complex_power_loss(nu, lam):
    """Complex power loss ``sum_i conj(lam_i) |nu_i|^2``.

    ``nu`` may be a vector or an ``n x N`` matrix of spectral voltage
    coordinates; for a matrix the loss is summed over samples.
    """
    nu = np.asarray(nu)
    lam = np.asarray(lam)
    if nu.shape[0] != lam.shape[0]:
        raise ValueError(f"dimension mismatch: nu has {nu.shape[0]} rows, lam has {lam.shape[0]}")
    w = np.abs(nu) ** 2
    if w.ndim == 2:
        w = w.sum(axis=1)
    return complex(np.sum(lam.conj() * w))


def generate_dataset(
    Y,
    model,
    N,
    seed,
    sigma_v=0.01,
    sigma_i=0.01,
    noise_mode="percent",
    v_nominal=1.0,
    slack_std=0.0,
):
    """Simulate ``N`` operating points of network ``Y`` and their measurements.

    Each operating point has voltages ``v0 * 1 + Y^+ dI`` where ``dI`` is
    drawn from ``model`` and ``v0`` is the substation voltage, nominal
    ``v_nominal`` plus complex Gaussian fluctuation of std ``slack_std``.
    Currents are ``I = Y V`` exactly. For a singular ``Y`` the model must be
    balanced. Noise stds are given in ``noise_mode`` units (percent of the
    mean clean entry modulus by default).
    """
    Y = np.asarray(Y, dtype=complex)
    n = Y.shape[0]
    dI = sample_currents(model, n, N, derive_seed(seed, _STREAM_CURRENTS))
    v0 = np.full(N, complex(v_nominal))
    if slack_std > 0:
        v0 = v0 + slack_std * _blocked_normal(derive_seed(seed, _STREAM_SLACK), 1, N)[0]
    if _is_singular(Y):
        I_clean = dI
        V_clean = solve_voltages(Y, I_clean, alpha=v0)
    else:
        # Y (v0 1) adds the shunt currents drawn at the substation voltage.
        I_clean = dI + np.outer(Y.sum(axis=1), v0)
        V_clean = solve_voltages(Y, I_clean)
    sv = noise_std(V_clean, sigma_v, noise_mode)
    si = noise_std(I_clean, sigma_i, noise_mode)
    V_meas = add_noise(V_clean, sv, derive_seed(seed, _STREAM_NOISE_V))
    I_meas = add_noise(I_clean, si, derive_seed(seed, _STREAM_NOISE_I))
    return PhasorDataset(
        V_meas=V_meas,
        I_meas=I_meas,
        V_clean=V_clean,
        I_clean=I_clean,
        sigma_v=sv,
        sigma_i=si,
        seed=int(seed),
    )
