"""Admittance-matrix estimators, as functions and scikit-learn style classes."""

from .least_squares import (
    ConstrainedLeastSquares,
    LassoEstimator,
    OLSEstimator,
    constrained_ls,
    lasso_alpha_max,
    lasso_estimate,
    ols_estimate,
)
from .spectral import (
    MapLambdaConfig,
    SpectralMAPEstimator,
    map_lambda_estimate,
    recover_eigenvectors,
)
from .structure import (
    LaplacianPostfilter,
    Postfiltered,
    StructureMaps,
    build_structure_maps,
    pinv_factorization_gap,
    postfilter,
)
from .wiener import WellConditionedWienerFilter, WienerFilter, wcwf_estimate, wiener_filter

ESTIMATORS = {
    "ols": OLSEstimator,
    "lasso": LassoEstimator,
    "wiener": WienerFilter,
    "wcwf": WellConditionedWienerFilter,
    "map_lambda": SpectralMAPEstimator,
    "constrained_ls": ConstrainedLeastSquares,
}

__all__ = [
    "ESTIMATORS",
    "ConstrainedLeastSquares",
    "LaplacianPostfilter",
    "LassoEstimator",
    "MapLambdaConfig",
    "OLSEstimator",
    "Postfiltered",
    "SpectralMAPEstimator",
    "StructureMaps",
    "WellConditionedWienerFilter",
    "WienerFilter",
    "build_structure_maps",
    "constrained_ls",
    "lasso_alpha_max",
    "lasso_estimate",
    "map_lambda_estimate",
    "ols_estimate",
    "pinv_factorization_gap",
    "postfilter",
    "recover_eigenvectors",
    "wcwf_estimate",
    "wiener_filter",
]
