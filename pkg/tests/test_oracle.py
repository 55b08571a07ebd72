import math

import numpy as np
import pytest
from conftest import random_tree
from scipy import integrate
from scipy.stats import norm

from pmbart.oracle import (
    QuadratureError,
    fixed_tree_posterior,
    pointwise_monotone_check,
    truncated_normal_moments,
)
from pmbart.tree import SplitRule, Tree, is_monotone, leaf_cells


def test_half_normal_moments():
    m, v = truncated_normal_moments(0, 1, 0, math.inf)
    assert m == pytest.approx(math.sqrt(2 / math.pi), abs=1e-15)
    assert v == pytest.approx(1 - 2 / math.pi, abs=1e-15)
    assert m == pytest.approx(0.79788, abs=1e-5) and v == pytest.approx(0.36338, abs=1e-5)


def test_untruncated_moments():
    assert truncated_normal_moments(1.5, 2.0, -math.inf, math.inf) == pytest.approx((1.5, 4.0), abs=1e-14)


def test_symmetric_interval_keeps_mean():
    m, _ = truncated_normal_moments(0.7, 1.3, 0.7 - 2.0, 0.7 + 2.0)
    assert m == pytest.approx(0.7, abs=1e-14)


def test_far_tail_moments_are_sane():
    m, v = truncated_normal_moments(0, 1, 8, math.inf)
    assert 8 < m < 8.2 and 0 < v < 0.02


def test_degenerate_interval_rejected():
    with pytest.raises(ValueError):
        truncated_normal_moments(0, 1, 1, 1)


def split_tree(cut=0.0):
    return Tree({0: SplitRule(0, 0, cut)}, {1: 0.0, 2: 0.0})


def test_one_leaf_continuous_closed_form():
    rng = np.random.default_rng(1)
    X = rng.uniform(-1, 1, (12, 1))
    y = rng.normal(0.4, 0.7, 12)
    tau, sigma = 0.8, 0.7
    post = fixed_tree_posterior(X, y, Tree.root(), probit=False, prior_sd=tau, sigma=sigma)
    v = 1 / (12 / sigma**2 + 1 / tau**2)
    assert post.means[0] == pytest.approx(v * y.sum() / sigma**2, abs=1e-8)


def test_one_leaf_probit_against_adaptive_quadrature():
    y = np.array([1, 1, 0, 1, 0, 1, 1, 1, 0, 1], dtype=float)
    X = np.linspace(-1, 1, 10)[:, None]
    tau, c = 0.6, 0.3

    def dens(mu):
        p = norm.cdf(mu + c)
        return norm.pdf(mu, 0, tau) * np.prod(np.where(y == 1, p, 1 - p))

    z, _ = integrate.quad(dens, -8, 8, epsabs=1e-14)
    m1, _ = integrate.quad(lambda u: u * dens(u), -8, 8, epsabs=1e-14)
    post = fixed_tree_posterior(X, y, Tree.root(), probit=True, prior_sd=tau, offset=c)
    assert post.means[0] == pytest.approx(m1 / z, abs=1e-8)
    assert post.log_evidence == pytest.approx(math.log(z), abs=1e-8)


def test_constraint_active_orders_means():
    X = np.linspace(-1, 1, 10)[:, None]
    y = np.where(X[:, 0] <= 0, 2.0, -2.0)
    free = fixed_tree_posterior(X, y, split_tree(), probit=False, prior_sd=1.0)
    tied = fixed_tree_posterior(X, y, split_tree(), probit=False, prior_sd=1.0, monotone=(0,))
    assert free.means[0] > free.means[1]
    assert tied.means[0] <= tied.means[1]


def test_two_leaf_probit_is_resolution_stable():
    rng = np.random.default_rng(7)
    X = rng.uniform(-3, 3, (10, 1))
    y = (rng.random(10) < norm.cdf(X[:, 0])).astype(float)
    a = fixed_tree_posterior(X, y, split_tree(), probit=True, prior_sd=0.5, monotone=(0,), resolution=16, check=False)
    b = fixed_tree_posterior(X, y, split_tree(), probit=True, prior_sd=0.5, monotone=(0,), resolution=32, check=False)
    assert np.max(np.abs(a.means - b.means)) < 1e-6


def test_nonconvergence_is_reported():
    X = np.linspace(-1, 1, 10)[:, None]
    y = np.r_[np.zeros(5), np.ones(5)]
    with pytest.raises(QuadratureError):
        fixed_tree_posterior(X, y, split_tree(), probit=True, prior_sd=0.5, monotone=(0,), resolution=1)


def test_three_leaf_limit():
    t = Tree({0: SplitRule(0, 0, 0.0), 1: SplitRule(0, 0, -0.5), 2: SplitRule(0, 0, 0.5)}, {3: 0, 4: 0, 5: 0, 6: 0})
    with pytest.raises(ValueError):
        fixed_tree_posterior(np.zeros((4, 1)), np.zeros(4), t, probit=False, prior_sd=1.0)


def test_pointwise_check_trivial_cases():
    assert pointwise_monotone_check([Tree.root(1.0)], {0}, 100, seed=0, n_vars=1)
    bad = Tree({0: SplitRule(0, 0, 0.0)}, {1: 1.0, 2: 0.0})
    assert not pointwise_monotone_check([bad], {0}, 1000, seed=0)


def test_pointwise_check_agrees_with_is_monotone(rng):
    for _ in range(100):
        t = random_tree(rng, n_vars=2, n_splits=int(rng.integers(1, 7)))
        if rng.random() < 0.5:
            cells = leaf_cells(t, 2)
            t = t.with_values({c.leaf: float(np.nan_to_num(c.lo[0], neginf=-5.0) + rng.normal(0, 0.05)) for c in cells})
        expect = is_monotone(t, {0}, 2)
        got = pointwise_monotone_check([t], {0}, 3000, seed=int(rng.integers(1 << 31)), n_vars=2)
        assert got == expect
