import math

import mpmath
import numpy as np
import pytest

from pmbart import truncnorm
from pmbart.oracle import truncated_normal_moments

INF = math.inf

CASES = [
    (0.0, 1.0, 0.0, INF),
    (0.0, 1.0, -INF, INF),
    (1.0, 2.0, -1.0, 0.5),
    (0.3, 0.5, 0.0, 0.1),
    (0.0, 1.0, 8.0, INF),  # mean 8 sd below the interval
    (0.0, 1.0, -INF, -8.0),
    (0.0, 1.0, 8.0, 8.05),
    (2.0, 0.25, 4.0, 4.5),
    (-3.0, 1.0, 5.0, 9.0),
    (0.0, 1.0, 4.9, 5.3),
]


def _draws(mean, sd, lo, hi, n, seed):
    rng = np.random.default_rng(seed)
    return np.array([truncnorm.sample(rng, mean, sd, lo, hi) for _ in range(n)])


@pytest.mark.parametrize("mean,sd,lo,hi", CASES)
def test_moments_match_oracle(mean, sd, lo, hi):
    n = 100_000
    x = _draws(mean, sd, lo, hi, n, seed=hash((mean, sd, lo, hi)) % 2**32)
    assert np.all((x >= lo) & (x <= hi)) and np.all(np.isfinite(x))
    m_ref, v_ref = truncated_normal_moments(mean, sd, lo, hi)
    se_mean = math.sqrt(v_ref / n)
    assert abs(x.mean() - m_ref) <= 4 * se_mean
    c = x - x.mean()
    se_var = math.sqrt(max(np.mean(c**4) - np.mean(c**2) ** 2, 1e-300) / n)
    assert abs(x.var() - v_ref) <= 4 * se_var + 1e-12


def test_sample_above_matches_half_normal():
    rng = np.random.default_rng(4)
    n = 100_000
    excess = truncnorm.sample_above(rng, np.zeros(n))
    m_ref, v_ref = truncated_normal_moments(0, 1, 0, INF)
    assert np.all(excess >= 0)
    assert abs(excess.mean() - m_ref) <= 4 * math.sqrt(v_ref / n)


def test_sample_above_far_tail():
    rng = np.random.default_rng(5)
    a = np.full(50_000, 8.0)
    z = a + truncnorm.sample_above(rng, a)
    m_ref, v_ref = truncated_normal_moments(0, 1, 8, INF)
    assert np.all(np.isfinite(z)) and np.all(z >= 8)
    assert abs(z.mean() - m_ref) <= 4 * math.sqrt(v_ref / len(z))


def test_sample_above_negative_threshold():
    rng = np.random.default_rng(6)
    a = np.full(50_000, -2.0)
    z = a + truncnorm.sample_above(rng, a)
    m_ref, v_ref = truncated_normal_moments(0, 1, -2, INF)
    assert abs(z.mean() - m_ref) <= 4 * math.sqrt(v_ref / len(z))


@pytest.mark.parametrize("a,b", [(-1.0, 2.0), (3.0, INF), (-INF, -12.0), (9.0, 9.5), (-0.5, 40.0), (30.0, 31.0)])
def test_log_mass_against_mpmath(a, b):
    with mpmath.workdps(40):
        ref = mpmath.log(mpmath.ncdf(b) - mpmath.ncdf(a)) if a < 0 else mpmath.log(mpmath.ncdf(-a) - mpmath.ncdf(-b))
    assert truncnorm.log_mass(a, b) == pytest.approx(float(ref), rel=1e-10, abs=1e-12)


def test_degenerate_interval():
    rng = np.random.default_rng(0)
    assert truncnorm.standard(rng, 1.5, 1.5) == 1.5
    with pytest.raises(ValueError):
        truncnorm.standard(rng, 2.0, 1.0)


def test_tight_interval_far_from_mean():
    rng = np.random.default_rng(1)
    x = [truncnorm.sample(rng, 5.0, 0.1, 0.0, 0.1) for _ in range(2000)]
    assert min(x) >= 0.0 and max(x) <= 0.1
