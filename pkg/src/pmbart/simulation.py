"""Piecewise-linear monotone probit benchmark."""

from __future__ import annotations

import numpy as np
from scipy.special import ndtr

from .data import Dataset

X_RANGE = (-3.0, 3.0)


def true_latent(x):
    """``f(x) = 0.2 x`` for ``x < 0`` and ``x`` otherwise."""
    x = np.asarray(x, dtype=float)
    return np.where(x < 0, 0.2 * x, x)


def true_probability(x):
    return ndtr(true_latent(x))


def simulate(n: int = 500, seed: int = 0) -> Dataset:
    """``x ~ U(-3, 3)`` and ``y ~ Bernoulli(Phi(f(x)))``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    x = rng.uniform(*X_RANGE, size=n)
    y = (rng.random(n) < true_probability(x)).astype(float)
    return Dataset(x[:, None], y, ("x",))


def linear_grid(lo: float, hi: float, count: int) -> np.ndarray:
    if not hi > lo or count < 2:
        raise ValueError("grid needs min < max and count >= 2")
    return np.linspace(lo, hi, count)
