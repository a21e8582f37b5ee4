"""Admittance-matrix identification of distribution networks from phasor data."""

from .covariance import (
    JointCovariance,
    TruncatedBasis,
    condition_number,
    joint_covariance,
    sample_covariance,
    truncated_eigenbasis,
)
from .grid import (
    AdmittanceMatrix,
    NetworkSpec,
    SpectralBasis,
    build_admittance,
    check_constant_xr,
    kron_reduce,
    make_constant_xr,
    pseudoinverse_from_spectrum,
    random_radial_network,
    spectral_decompose,
)
from .metrics import dist_w, relative_frobenius_error
from .simulation import (
    CurrentModel,
    PhasorDataset,
    add_noise,
    center,
    complex_power_loss,
    generate_dataset,
    sample_currents,
    solve_voltages,
)

__version__ = "0.1.0"
