import numpy as np
import pytest

from beamsel.channel import ArrayGeometry
from beamsel.codebook import RadioConfig, build_dft_codebook


@pytest.fixture(scope="session")
def radio():
    return RadioConfig.from_dbm()


@pytest.fixture(scope="session")
def cb_tx():
    return build_dft_codebook(ArrayGeometry(8, 8))


@pytest.fixture(scope="session")
def cb_rx():
    return build_dft_codebook(ArrayGeometry(2, 2))


@pytest.fixture
def rng():
    return np.random.default_rng(42)


def random_channel(rng, m_r=4, m_t=64):
    """Complex Gaussian channel draw used across test modules."""
    return (rng.standard_normal((m_r, m_t)) + 1j * rng.standard_normal((m_r, m_t))) / np.sqrt(2)
