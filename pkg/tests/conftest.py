import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_orthonormal(m, k, rng):
    q, _ = np.linalg.qr(rng.standard_normal((m, k)))
    return q


def make_low_rank(m, n, k, rng, sigma=None):
    """Exact rank-k matrix with prescribed singular values (default k..1)."""
    if sigma is None:
        sigma = np.arange(k, 0, -1, dtype=np.float64)
    sigma = np.asarray(sigma, dtype=np.float64)
    u = random_orthonormal(m, k, rng)
    v = random_orthonormal(n, k, rng)
    return (u * sigma) @ v.T


def make_noisy_low_rank(m, n, k, rng, sigma=None, noise=0.05):
    """Rank-k signal plus dense Gaussian noise.

    The noise floor lands near noise * sqrt(max(m, n) / min(m, n)) in the
    trailing singular values, so pick `noise` well below sigma[k-1] when a
    clean gap at position k is wanted.
    """
    a = make_low_rank(m, n, k, rng, sigma=sigma)
    return a + noise * rng.standard_normal((m, n))


@pytest.fixture
def low_rank():
    return make_low_rank


@pytest.fixture
def noisy_low_rank():
    return make_noisy_low_rank
