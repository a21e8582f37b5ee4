"""Input checks for complex phasor arrays.

scikit-learn's ``check_array`` rejects complex input, so the estimators
validate through these helpers instead.
"""

import numpy as np

from .exceptions import DataError


def check_complex_2d(X, name="X", min_cols=1):
    X = np.asarray(X)
    if X.ndim != 2:
        raise DataError(f"{name} must be 2-D, got shape {X.shape}")
    if not np.issubdtype(X.dtype, np.number):
        raise DataError(f"{name} must be numeric, got dtype {X.dtype}")
    X = X.astype(complex, copy=False)
    if not np.all(np.isfinite(X)):
        raise DataError(f"{name} contains NaN or infinite values")
    if X.shape[1] < min_cols:
        raise DataError(f"{name} needs at least {min_cols} columns, got {X.shape[1]}")
    return X


def check_square(A, name="A"):
    A = check_complex_2d(A, name)
    if A.shape[0] != A.shape[1]:
        raise DataError(f"{name} must be square, got shape {A.shape}")
    return A


def check_phasor_pair(V, I, min_samples=1):
    """Validate sample-major arrays (``n_samples x n_buses``) and return them bus-major."""
    V = check_complex_2d(V, "V")
    I = check_complex_2d(I, "I")
    if V.shape != I.shape:
        raise DataError(f"voltage samples {V.shape} and current samples {I.shape} differ")
    if V.shape[0] < min_samples:
        raise DataError(f"need at least {min_samples} samples, got {V.shape[0]}")
    return V.T, I.T


def dataset_arrays(dataset):
    """Bus-major measured (V, I) from a PhasorDataset or a ``(V, I)`` pair."""
    if hasattr(dataset, "V_meas"):
        return dataset.V_meas, dataset.I_meas
    V, I = dataset
    V = check_complex_2d(V, "V")
    I = check_complex_2d(I, "I")
    if V.shape != I.shape:
        raise DataError(f"voltage samples {V.shape} and current samples {I.shape} differ")
    return V, I
