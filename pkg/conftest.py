import numpy as np
import pytest

from space import SampledSpace, subdivide
from utils.tolerances import reset_tolerances


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long end-to-end runs (deselect with -m 'not slow')")


@pytest.fixture(autouse=True)
def fresh_tolerances():
    reset_tolerances()
    yield
    reset_tolerances()


def make_interval(r=0):
    root = SampledSpace.from_simplices([[0.0], [1.0]], [[0, 1]])
    return subdivide(root, r)


def make_triangle(r=0):
    root = SampledSpace.from_simplices([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], [[0, 1, 2]])
    return subdivide(root, r)


def random_unitary(rng, n):
    Z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    Q, R = np.linalg.qr(Z)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def random_psd(rng, n, rank, low=0.2, high=1.0):
    """PSD matrix with exactly ``rank`` eigenvalues in [low, high], the rest zero."""
    u = random_unitary(rng, n)
    lam = np.r_[rng.uniform(low, high, rank), np.zeros(n - rank)]
    A = (u * lam) @ u.conj().T
    return 0.5 * (A + A.conj().T)


@pytest.fixture
def rng():
    return np.random.default_rng(1204982)


@pytest.fixture
def interval():
    return make_interval(3)


@pytest.fixture
def triangle():
    return make_triangle(1)
