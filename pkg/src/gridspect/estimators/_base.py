"""Common scikit-learn interface for admittance-matrix estimators.

Estimators follow the regressor convention: ``fit(X, y)`` takes voltage
samples ``X`` and current samples ``y``, both ``(n_samples, n_buses)``,
and learns ``admittance_`` so that ``y ~ X @ admittance_.T``.
"""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .._validation import check_complex_2d, check_phasor_pair
from ..exceptions import DataError


class AdmittanceEstimator(BaseEstimator):
    """Base class; subclasses implement ``_estimate(V, I)`` on bus-major arrays."""

    center = True

    def fit(self, X, y):
        V, I = check_phasor_pair(X, y, min_samples=2)
        if self.center:
            V = V - V.mean(axis=1, keepdims=True)
            I = I - I.mean(axis=1, keepdims=True)
        self.admittance_ = self._estimate(V, I)
        self.n_features_in_ = V.shape[0]
        return self

    def _estimate(self, V, I):
        raise NotImplementedError

    def predict(self, X):
        """Current injections implied by voltages ``X`` under the fitted model."""
        check_is_fitted(self, "admittance_")
        X = check_complex_2d(X, "X")
        if X.shape[1] != self.n_features_in_:
            raise DataError(f"X has {X.shape[1]} buses, model was fitted on {self.n_features_in_}")
        return X @ self.admittance_.T

    def score(self, X, y):
        """Coefficient of determination generalized to complex targets."""
        y = check_complex_2d(y, "y")
        resid = y - self.predict(X)
        dev = y - y.mean(axis=0, keepdims=True)
        return 1.0 - float(np.sum(np.abs(resid) ** 2) / np.sum(np.abs(dev) ** 2))

    def _more_tags(self):
        return {"X_types": ["2darray"], "multioutput": True}
