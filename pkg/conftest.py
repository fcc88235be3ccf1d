"""Shared fixtures; placing this file at the root puts the `src` package on sys.path"""

import numpy as np
import pytest

from src.modules.data import generate_three_cluster, generate_two_cluster


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope='session')
def two_cluster():
    return generate_two_cluster(seed=7)


@pytest.fixture(scope='session')
def three_cluster():
    return generate_three_cluster(seed=11)


@pytest.fixture(scope='session')
def clean_normal():
    return np.random.default_rng(42).standard_normal((2000, 2))


@pytest.fixture
def random_affine():
    """Factory of well-conditioned random nonsingular matrices and shifts"""
    def draw(rng, dim):
        while True:
            A = rng.standard_normal((dim, dim)) + 1.5 * np.eye(dim)
            if np.linalg.cond(A) < 50:
                return A, rng.standard_normal(dim) * 3.0
    return draw


@pytest.fixture(scope='session')
def clean_depths(clean_normal):
    from src.modules.depth import sample_depths
    return sample_depths(clean_normal, clean_normal, max_workers=4)
