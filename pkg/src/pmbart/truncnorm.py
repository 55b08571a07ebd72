"""Exact sampling from truncated normal distributions.

Central intervals use inversion of the normal CDF (through the upper tail
when the interval sits right of zero, to keep precision). Intervals whose
nearest end lies beyond ``TAIL`` standard deviations use rejection: a
translated-exponential proposal for long intervals and a uniform proposal
for short ones. Both are exact, so there is no fallback path that returns
an approximate value.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import log_ndtr, ndtr, ndtri

TAIL = 5.0


def log_mass(a: float, b: float) -> float:
    """``log(Phi(b) - Phi(a))`` for a standardized interval, stable in both tails."""
    if not a < b:
        return -math.inf
    if a > 0:
        la, lb = log_ndtr(-a), log_ndtr(-b)
        return float(la + math.log1p(-math.exp(lb - la)))
    if b < 0:
        la, lb = log_ndtr(a), log_ndtr(b)
        return float(lb + math.log1p(-math.exp(la - lb)))
    return math.log(float(ndtr(b) - ndtr(a)))


def log_mass_scaled(mean: float, sd: float, lo: float, hi: float) -> float:
    return log_mass((lo - mean) / sd, (hi - mean) / sd)


def _tail(rng: np.random.Generator, a: float, b: float) -> float:
    # a >= TAIL > 0, a < b <= inf
    if (b - a) * a < 1.0:
        while True:
            z = a + (b - a) * rng.random()
            if rng.random() <= math.exp(0.5 * (a * a - z * z)):
                return z
    rate = 0.5 * (a + math.sqrt(a * a + 4.0))
    while True:
        z = a + rng.exponential() / rate
        if z < b and rng.random() <= math.exp(-0.5 * (z - rate) ** 2):
            return z


def standard(rng: np.random.Generator, a: float, b: float) -> float:
    """One draw from N(0, 1) restricted to ``[a, b]``."""
    if not a < b:
        if a == b:
            return a
        raise ValueError(f"empty truncation interval [{a}, {b}]")
    if b <= 0:
        return -standard(rng, -b, -a)
    if a >= TAIL:
        return _tail(rng, a, b)
    z = math.inf
    while math.isinf(z):
        u = rng.random()
        if a < 0:
            pa, pb = ndtr(a), ndtr(b)
            z = float(ndtri(pa + u * (pb - pa)))
        else:
            qa, qb = ndtr(-a), ndtr(-b)
            z = -float(ndtri(qa - u * (qa - qb)))
    return min(max(z, a), b)


def sample(rng: np.random.Generator, mean: float, sd: float, lo: float, hi: float) -> float:
    """One draw from N(mean, sd^2) restricted to ``[lo, hi]``."""
    z = standard(rng, (lo - mean) / sd, (hi - mean) / sd)
    return min(max(mean + sd * z, lo), hi)


def sample_above(rng: np.random.Generator, a: np.ndarray) -> np.ndarray:
    """Vectorized draws of ``z - a`` where ``z ~ N(0, 1)`` restricted to ``[a, inf)``.

    Returning the excess over the threshold keeps results exactly
    nonnegative, which the probit latent update relies on.
    """
    a = np.asarray(a, dtype=float)
    u = rng.random(a.shape)
    z = np.empty_like(a)
    body = a < TAIL
    z[body] = -ndtri(ndtr(-a[body]) * (1.0 - u[body]))
    for i in np.flatnonzero(a >= TAIL):
        z[i] = _tail(rng, float(a[i]), math.inf)
    return np.maximum(z - a, 0.0)
