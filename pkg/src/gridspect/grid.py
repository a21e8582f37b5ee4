"""Network descriptions, admittance matrices and their spectral decomposition.

Bus indices are 0-based in memory. Branch admittances follow the series
convention ``Re(y) > 0, Im(y) <= 0``; shunts are stored as given.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .exceptions import NetworkError, NotNormalError, SingularBlockError

__all__ = [
    "NetworkSpec",
    "AdmittanceMatrix",
    "SpectralBasis",
    "XRReport",
    "build_admittance",
    "incidence_matrix",
    "kron_reduce",
    "spectral_decompose",
    "pseudoinverse_from_spectrum",
    "check_constant_xr",
    "make_constant_xr",
    "normality_residual",
    "random_radial_network",
]

# Relative tolerances used to set the AdmittanceMatrix flags.
_ROWSUM_RTOL = 1e-12
_NORMAL_RTOL = 1e-10


@dataclass(frozen=True)
class NetworkSpec:
    """Bus/branch/shunt description of a single-phase network.

    Parameters
    ----------
    n : int
        Number of buses.
    branches : sequence of (i, j, y)
        Series admittance ``y`` between buses ``i`` and ``j`` (0-based).
    shunts : sequence of (i, y)
        Admittance from bus ``i`` to ground.
    """

    n: int
    branches: tuple = ()
    shunts: tuple = ()

    def __post_init__(self):
        n = int(self.n)
        if n < 1:
            raise NetworkError(f"bus count must be positive, got {self.n}")
        object.__setattr__(self, "n", n)
        branches = tuple((int(i), int(j), complex(y)) for i, j, y in self.branches)
        shunts = tuple((int(i), complex(y)) for i, y in self.shunts)
        object.__setattr__(self, "branches", branches)
        object.__setattr__(self, "shunts", shunts)

        seen = set()
        for k, (i, j, y) in enumerate(branches):
            if not (0 <= i < n and 0 <= j < n):
                raise NetworkError(f"branch {k} ({i}, {j}) references a bus outside 0..{n - 1}")
            if i == j:
                raise NetworkError(f"branch {k} is a self-loop at bus {i}")
            key = (min(i, j), max(i, j))
            if key in seen:
                raise NetworkError(f"duplicate branch between buses {key[0]} and {key[1]}")
            seen.add(key)
            if not (y.real > 0 and y.imag <= 0):
                raise NetworkError(
                    f"branch {k} ({i}, {j}) violates Re(y) > 0, Im(y) <= 0: y = {y}"
                )
        for i, y in shunts:
            if not 0 <= i < n:
                raise NetworkError(f"shunt at bus {i} is outside 0..{n - 1}")
            if y.real < 0 or y.imag < 0:
                warnings.warn(
                    f"shunt at bus {i} has a negative part (y = {y}); "
                    "expected g >= 0 and b >= 0",
                    stacklevel=3,
                )
        if n > 1 and not self._connected():
            raise NetworkError("network graph is not connected")

    def _connected(self):
        if not self.branches:
            return self.n == 1
        rows = [i for i, _, _ in self.branches]
        cols = [j for _, j, _ in self.branches]
        adj = sp.coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(self.n, self.n))
        ncomp, _ = connected_components(adj, directed=False)
        return ncomp == 1

    @property
    def m(self):
        return len(self.branches)

    def branch_admittances(self):
        return np.array([y for _, _, y in self.branches], dtype=complex)

    def shunt_vector(self):
        out = np.zeros(self.n, dtype=complex)
        for i, y in self.shunts:
            out[i] += y
        return out

    def without_shunts(self):
        return NetworkSpec(self.n, self.branches, ())


@dataclass(frozen=True)
class AdmittanceMatrix:
    """Dense complex symmetric admittance matrix with structure flags."""

    entries: np.ndarray
    is_symmetric: bool = field(init=False)
    has_shunts: bool = field(init=False)
    is_normal: bool = field(init=False)

    def __post_init__(self):
        Y = np.array(self.entries, dtype=complex)
        if Y.ndim != 2 or Y.shape[0] != Y.shape[1]:
            raise ValueError(f"admittance matrix must be square, got shape {Y.shape}")
        Y.setflags(write=False)
        object.__setattr__(self, "entries", Y)
        scale = max(np.linalg.norm(Y), np.finfo(float).tiny)
        object.__setattr__(
            self, "is_symmetric", bool(np.linalg.norm(Y - Y.T) <= _ROWSUM_RTOL * scale)
        )
        object.__setattr__(
            self, "has_shunts", bool(np.abs(Y.sum(axis=1)).max() > _ROWSUM_RTOL * scale)
        )
        object.__setattr__(self, "is_normal", bool(normality_residual(Y) <= _NORMAL_RTOL))

    @property
    def n(self):
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.entries
        return self.entries.astype(dtype)

    def shunt_vector(self):
        """Row sums, which equal the per-bus shunt admittances."""
        return self.entries.sum(axis=1)


class SpectralBasis(NamedTuple):
    """Unitary eigenvectors ``W`` (columns) paired with eigenvalues ``lam``."""

    W: np.ndarray
    lam: np.ndarray

    def reconstruct(self):
        return (self.W * self.lam) @ self.W.conj().T


class XRReport(NamedTuple):
    """Outcome of :func:`check_constant_xr`.

    ``ratio`` is the common g/b ratio, or None when ratios differ.
    ``deviations`` maps branch index to its relative deviation from the
    median ratio; ``undefined`` lists branches with b = 0.
    """

    ratio: float | None
    deviations: dict
    undefined: tuple

    @property
    def constant(self):
        return self.ratio is not None


def normality_residual(Y):
    """Return ``||Y Y^H - Y^H Y||_F / ||Y||_F^2``."""
    Y = np.asarray(Y)
    nrm = np.linalg.norm(Y)
    if nrm == 0:
        return 0.0
    Yh = Y.conj().T
    return float(np.linalg.norm(Y @ Yh - Yh @ Y) / nrm**2)


def incidence_matrix(spec):
    """Node-edge incidence matrix, each branch oriented from ``i`` to ``j``."""
    B = np.zeros((spec.n, spec.m))
    for e, (i, j, _) in enumerate(spec.branches):
        B[i, e] = 1.0
        B[j, e] = -1.0
    return B


def build_admittance(spec):
    """Assemble the admittance matrix of ``spec``.

    Off-diagonal entries are the negated branch admittances; each diagonal
    entry is the sum of incident branch admittances plus the bus shunt.
    """
    n = spec.n
    Y = np.zeros((n, n), dtype=complex)
    for i, j, y in spec.branches:
        Y[i, j] -= y
        Y[j, i] -= y
        Y[i, i] += y
        Y[j, j] += y
    Y[np.diag_indices(n)] += spec.shunt_vector()
    return AdmittanceMatrix(Y)


def kron_reduce(Y, keep):
    """Eliminate every bus not in ``keep`` through the Schur complement.

    Returns ``Y_AA - Y_AB Y_BB^{-1} Y_BA`` ordered as ``sorted(keep)``.
    """
    Y = np.asarray(Y, dtype=complex)
    n = Y.shape[0]
    keep = sorted(set(int(k) for k in keep))
    if not keep:
        raise ValueError("keep set must be nonempty")
    if keep[0] < 0 or keep[-1] >= n:
        raise ValueError(f"keep indices must lie in 0..{n - 1}")
    elim = [k for k in range(n) if k not in set(keep)]
    if not elim:
        return AdmittanceMatrix(Y.copy())
    Yaa = Y[np.ix_(keep, keep)]
    Yab = Y[np.ix_(keep, elim)]
    Yba = Y[np.ix_(elim, keep)]
    Ybb = Y[np.ix_(elim, elim)]
    try:
        with warnings.catch_warnings():
            # singularity is reported below as SingularBlockError
            warnings.simplefilter("ignore", sla.LinAlgWarning)
            lu = sla.lu_factor(Ybb, check_finite=True)
    except (sla.LinAlgError, ValueError) as exc:
        raise SingularBlockError(f"eliminated block is singular: {exc}") from exc
    if np.any(np.abs(np.diag(lu[0])) <= 1e-14 * max(np.abs(Ybb).max(), 1e-300)):
        raise SingularBlockError("eliminated block Y_BB is singular")
    red = Yaa - Yab @ sla.lu_solve(lu, Yba)
    # Schur complement of a symmetric matrix is symmetric; remove round-off.
    red = 0.5 * (red + red.T)
    return AdmittanceMatrix(red)


def _pivot_rows(W):
    # first entry within round-off of the column maximum, so ties resolve deterministically
    mag = np.abs(W)
    return np.argmax(mag >= (1.0 - 1e-9) * mag.max(axis=0), axis=0)


def _normalize_phase(W):
    idx = _pivot_rows(W)
    pivot = W[idx, np.arange(W.shape[1])]
    return W * (np.abs(pivot) / pivot)


def spectral_decompose(Y, rtol=1e-8):
    """Unitary eigendecomposition of a normal admittance matrix.

    The complex Schur form of a normal matrix is diagonal, so the Schur
    vectors form a unitary eigenbasis even for repeated eigenvalues.
    Eigenpairs are sorted by ascending modulus and each eigenvector is
    rotated so its largest-modulus entry is real positive.

    Raises
    ------
    NotNormalError
        If ``||YY^H - Y^HY||_F > rtol ||Y||_F^2``.
    """
    Y = np.asarray(Y, dtype=complex)
    res = normality_residual(Y)
    if res > rtol:
        raise NotNormalError(
            f"matrix is not normal: commutator residual {res:.3e} > {rtol:.1e}", residual=res
        )
    T, Z = sla.schur(Y, output="complex")
    lam = np.diag(T).copy()
    order = np.argsort(np.abs(lam), kind="stable")
    return SpectralBasis(_normalize_phase(Z[:, order]), lam[order])


def pseudoinverse_from_spectrum(basis, rank_tol=1e-10):
    """Moore-Penrose pseudoinverse ``W diag(lam^+) W^H``.

    Eigenvalues with ``|lam| <= rank_tol * max|lam|`` are treated as zero.
    """
    W, lam = basis
    lam = np.asarray(lam, dtype=complex)
    cutoff = rank_tol * np.abs(lam).max() if lam.size else 0.0
    inv = np.zeros_like(lam)
    nz = np.abs(lam) > cutoff
    inv[nz] = 1.0 / lam[nz]
    return (W * inv) @ W.conj().T


def check_constant_xr(spec, rtol=1e-9):
    """Check whether every branch shares one conductance-susceptance ratio."""
    ratios = {}
    undefined = []
    for k, (_, _, y) in enumerate(spec.branches):
        if y.imag == 0:
            undefined.append(k)
        else:
            ratios[k] = y.real / y.imag
    if not ratios:
        return XRReport(None, {}, tuple(undefined))
    ref = float(np.median(list(ratios.values())))
    dev = {k: abs(r - ref) / abs(ref) for k, r in ratios.items()}
    if not undefined and max(dev.values()) <= rtol:
        return XRReport(ref, {}, ())
    return XRReport(None, {k: d for k, d in dev.items() if d > rtol}, tuple(undefined))


def make_constant_xr(spec):
    """Replace each branch impedance ``r + jx`` by ``r + jr``.

    The result has g/b = -1 on every branch. Shunts are kept.
    """
    branches = []
    for i, j, y in spec.branches:
        r = (1.0 / y).real
        branches.append((i, j, 1.0 / complex(r, r)))
    return NetworkSpec(spec.n, tuple(branches), spec.shunts)


def random_radial_network(
    n,
    seed=0,
    r_range=(0.01, 0.05),
    xr_range=(0.5, 2.0),
    shunt_range=(2e-4, 1e-3),
    shunts=True,
    lateral_prob=0.3,
):
    """Seeded random radial feeder with distribution-typical per-unit values.

    Buses are attached one at a time: with probability ``1 - lateral_prob``
    to the previously added bus (extending the current feeder) and
    otherwise to a uniformly chosen earlier bus (starting a lateral).
    Branch resistance is uniform in ``r_range`` and reactance is
    ``r * u`` with ``u`` uniform in ``xr_range``. When ``shunts`` is true,
    every bus gets a small capacitive line-charging shunt ``j*b`` with
    ``b`` uniform in ``shunt_range``.
    """
    rng = np.random.default_rng(seed)
    branches = []
    for k in range(1, n):
        if k == 1 or rng.random() >= lateral_prob:
            parent = k - 1
        else:
            parent = int(rng.integers(0, k))
        r = rng.uniform(*r_range)
        x = r * rng.uniform(*xr_range)
        branches.append((parent, k, 1.0 / complex(r, x)))
    sh = ()
    if shunts:
        sh = tuple((i, 1j * rng.uniform(*shunt_range)) for i in range(n))
    return NetworkSpec(n, tuple(branches), sh)

