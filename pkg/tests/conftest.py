import numpy as np
import pytest

from spinforge import hyperfine as hf


@pytest.fixture(scope="session")
def ref_params():
    return hf.REFERENCE_PARAMS


@pytest.fixture(scope="session")
def tau0_refined(ref_params):
    return 0.5 * hf.resonance_times(ref_params, 0, refine=True)[0]


@pytest.fixture()
def rng():
    return np.random.default_rng(20260810)


def random_hermitian(rng, dim):
    x = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (x + x.conj().T) / 2


def random_density(rng, dim):
    x = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = x @ x.conj().T
    return rho / np.trace(rho)
