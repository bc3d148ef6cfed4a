import numpy as np
import pytest


def sphere_points(rng, m, d, low=0.0):
    """Uniform-ish points on the max-norm sphere: random face, other coordinates in ``(low, 1)``."""
    th = rng.uniform(low, 1.0, size=(m, d))
    th[np.arange(m), rng.integers(0, d, size=m)] = 1.0
    return th


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
