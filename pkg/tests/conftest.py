import os

# single-threaded BLAS: the fits are small-matrix-bound and thread contention
# on tiny cores dominates otherwise; must be set before numpy loads
os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")
os.environ.setdefault("OMP_NUM_THREADS", "1")
os.environ.setdefault("MKL_NUM_THREADS", "1")

import numpy as np
import pytest

from cmll import Dataset


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_dataset(rng, n=40, n_features=10, n_labels=6, density=0.3, name="toy"):
    """Random dataset where every label occurs at least once."""
    x = rng.standard_normal((n, n_features))
    y = (rng.random((n, n_labels)) < density).astype(float)
    for j in range(n_labels):
        if y[:, j].sum() == 0:
            y[int(rng.integers(n)), j] = 1.0
    return Dataset(x, y, name)


def structured_dataset(rng, n=60, n_features=12, n_labels=6, name="structured"):
    """Labels driven by a few feature directions; larger eigengaps."""
    x = rng.standard_normal((n, n_features))
    w = rng.standard_normal((n_features, n_labels))
    s = x @ w
    y = (s > np.quantile(s, 0.7, axis=0)).astype(float)
    for j in range(n_labels):
        if y[:, j].sum() == 0:
            y[int(rng.integers(n)), j] = 1.0
    return Dataset(x, y, name)
