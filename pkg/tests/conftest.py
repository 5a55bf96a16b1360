import numpy as np
import pytest


@pytest.fixture
def rng():
    """Deterministic generator shared by randomized tests."""
    return np.random.default_rng(20240131)
