import numpy as np
import pytest

from lzeros.amplitude import EnergyDistribution


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)


def random_distribution(rng, d_max=16, d_min=2, span=(0.5, 4.0)):
    """Random strictly-spaced distribution with well-separated levels."""
    d = int(rng.integers(d_min, d_max + 1))
    e = np.sort(rng.uniform(-span[1], span[1], d))
    while d > 1 and np.min(np.diff(e)) < 1e-2:
        e = np.sort(rng.uniform(-span[1], span[1], d))
    k = rng.dirichlet(np.ones(d) * rng.uniform(0.4, 3.0))
    k = np.maximum(k, 1e-10)
    return EnergyDistribution(e, k / k.sum())
