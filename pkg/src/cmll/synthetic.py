"""Synthetic multi-label task with a low-dimensional latent structure.

A handful of latent coordinates drive the labels; the observed features mix
those coordinates with many weak nuisance dimensions through a random
rotation and add per-feature measurement noise. Ridge on the raw features
amplifies the low-variance nuisance directions, so supervised compression
of the feature space has a real advantage to demonstrate.
"""

from __future__ import annotations

import numpy as np

from .data import Dataset
from .errors import InputError
from .linalg import seeded_rng


def make_synthetic(
    n: int = 600,
    latent: int = 5,
    noise_dims: int = 45,
    n_labels: int = 15,
    seed: int = 0,
    feature_noise: float = 0.3,
    noise_scale: float = 0.1,
    pos_rate: tuple = (0.13, 0.27),
    name: str | None = None,
) -> Dataset:
    """Latent Z drives thresholded linear label scores; X hides Z among noise.

    `noise_scale` sets the nuisance dimensions' standard deviation (small,
    so the mixed features are redundant rather than independent) and
    `feature_noise` the per-feature measurement noise added after mixing.
    """
    if n < 2 or latent < 1 or noise_dims < 0 or n_labels < 2:
        raise InputError("bad synthetic-task sizes")
    rng = seeded_rng(seed)
    z = rng.standard_normal((n, latent))
    w_true = rng.standard_normal((latent, n_labels))
    scores = z @ w_true
    rates = rng.uniform(pos_rate[0], pos_rate[1], size=n_labels)
    y = np.zeros((n, n_labels))
    for j in range(n_labels):
        thresh = np.quantile(scores[:, j], 1.0 - rates[j])
        y[:, j] = (scores[:, j] > thresh).astype(np.float64)
    d = latent + noise_dims
    rot = np.linalg.qr(rng.standard_normal((d, d)))[0]
    x = np.hstack([z, noise_scale * rng.standard_normal((n, noise_dims))]) @ rot
    x += feature_noise * rng.standard_normal((n, d))
    return Dataset(x, y, name if name is not None else f"synthetic-seed{seed}")
