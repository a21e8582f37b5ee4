import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from gridspect import CurrentModel, build_admittance, generate_dataset, random_radial_network

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_laplacian(rng, n, dtype=complex):
    """Dense symmetric zero-row-sum matrix with random complex off-diagonals."""
    A = crandn(rng, n, n) if dtype is complex else rng.standard_normal((n, n))
    A = A + A.T
    np.fill_diagonal(A, 0)
    np.fill_diagonal(A, -A.sum(axis=1))
    return A


def noise_free(n, N, seed=0, shunts=True, constant_xr=False):
    from gridspect import make_constant_xr

    spec = random_radial_network(n, seed=seed, shunts=shunts)
    if constant_xr:
        spec = make_constant_xr(spec)
    Y = build_admittance(spec).entries
    ds = generate_dataset(
        Y, CurrentModel(sigma=0.03, balanced=True), N, seed, sigma_v=0, sigma_i=0, slack_std=0.005
    )
    return Y, ds


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.report_lines():
        terminalreporter.write_line(line)
