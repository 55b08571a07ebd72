import math

import numpy as np
import pytest
from scipy import integrate
from scipy.special import gammaincinv

from pmbart.data import CutpointGrid
from pmbart.model import ModelVariant
from pmbart.oracle import forward_tree_prior
from pmbart.priors import (
    INFLATION,
    LeafPriorParams,
    TreePriorParams,
    calibrate_leaf_prior,
    calibrate_sigma_prior,
    leaf_log_prior,
    split_probability,
    tree_log_prior,
)
from pmbart.tree import SplitRule, Tree, birth

BART = TreePriorParams(0.95, 2.0)
MONO = TreePriorParams(0.25, 0.8)


def test_split_probability_values():
    assert split_probability(0, BART) == 0.95
    assert split_probability(1, BART) == pytest.approx(0.95 / 4, abs=1e-15)
    assert split_probability(1, BART) == pytest.approx(0.2375, abs=1e-15)
    assert split_probability(0, MONO) == 0.25


def test_split_probability_monotone_in_depth():
    p = [split_probability(d, BART) for d in range(30)]
    assert all(a > b for a, b in zip(p, p[1:]))
    flat = TreePriorParams(0.5, 0.0)
    assert {split_probability(d, flat) for d in range(30)} == {0.5}
    assert all(0 < v < 1 for v in p)


def test_split_probability_depth_cap():
    assert split_probability(2, TreePriorParams(0.95, 2.0, max_depth=2)) == 0.0


def test_tree_prior_params_validated():
    with pytest.raises(ValueError):
        TreePriorParams(1.0, 2.0)
    with pytest.raises(ValueError):
        TreePriorParams(0.5, -1.0)


def test_tree_log_prior_root():
    grid = CutpointGrid((np.linspace(0, 1, 100),))
    assert tree_log_prior(Tree.root(), BART, grid) == pytest.approx(math.log(0.05), abs=1e-14)


def test_tree_log_prior_depth_one():
    cuts = np.linspace(-1, 1, 102)[1:-1]
    grid = CutpointGrid((cuts,))
    t = Tree({0: SplitRule(0, 49, float(cuts[49]))}, {1: 0.0, 2: 0.0})
    expect = math.log(0.95) - math.log(100) + 2 * math.log(1 - 0.2375)
    assert tree_log_prior(t, BART, grid) == pytest.approx(expect, abs=1e-14)


def test_tree_log_prior_invalid_split():
    grid = CutpointGrid((np.array([0.0, 1.0]),))
    t = Tree({0: SplitRule(0, 0, 0.0), 1: SplitRule(0, 1, 1.0)}, {3: 0.0, 4: 0.0, 2: 0.0})
    assert tree_log_prior(t, BART, grid) == -math.inf


def all_trees(grid):
    """Every tree buildable on ``grid`` (finite because cells run out of cutpoints)."""
    sizes = [len(c) for c in grid]

    def grow(t, pending):
        if not pending:
            yield t
            return
        node, rest = pending[0], pending[1:]
        yield from grow(t, rest)
        for v in range(len(grid)):
            start, stop = t.cut_index_range(node, v, sizes[v])
            for c in range(start, stop):
                child = birth(t, node, SplitRule(v, c, float(grid[v][c])), 0.0, 0.0)
                yield from grow(child, rest + (2 * node + 1, 2 * node + 2))

    yield from grow(Tree.root(), (0,))


@pytest.mark.parametrize("params", [BART, MONO])
def test_tiny_grid_mass_matches_forward_simulation(params):
    grid = CutpointGrid((np.array([0.25, 0.75]),))
    trees = list(all_trees(grid))
    probs = np.array([math.exp(tree_log_prior(t, params, grid)) for t in trees])
    assert probs.sum() == pytest.approx(1.0, abs=1e-12)
    depth = np.array([t.depth for t in trees])
    exact = np.array([probs[depth == d].sum() for d in range(3)])
    rng = np.random.default_rng(5)
    n = 40_000
    sims = np.array([forward_tree_prior(params.alpha, params.beta, grid.cuts, rng=rng)[0] for _ in range(n)])
    emp = np.array([np.mean(sims == d) for d in range(3)])
    se = np.sqrt(exact * (1 - exact) / n)
    assert np.all(np.abs(emp - exact) <= 4 * se + 1e-12)


def test_forward_root_probability():
    grid = CutpointGrid((np.linspace(0, 1, 100),))
    rng = np.random.default_rng(1)
    n = 20_000
    depth0 = np.mean([forward_tree_prior(0.95, 2.0, grid.cuts, rng=rng)[0] == 0 for _ in range(n)])
    assert abs(depth0 - 0.05) < 4 * math.sqrt(0.05 * 0.95 / n)


def test_leaf_prior_continuous():
    p = calibrate_leaf_prior("bart", 2, 200)
    assert p.mu_mean == 0.0
    assert p.mu_sd == 0.5 / (2 * math.sqrt(200))
    assert p.mu_sd == pytest.approx(0.017678, abs=1e-6)
    assert p.inflation == 1.0


def test_leaf_prior_probit():
    p = calibrate_leaf_prior(ModelVariant.PBART, 2, 200)
    assert p.mu_sd == 3 / (2 * math.sqrt(200))
    assert p.mu_sd == pytest.approx(0.106066, abs=1e-6)


@pytest.mark.parametrize("variant", ["mbart", "pmbart"])
def test_leaf_prior_monotone_inflation(variant):
    p = calibrate_leaf_prior(variant, 2, 200)
    assert abs(p.inflation - math.pi / (math.pi - 1)) < 1e-12
    assert p.inflation == pytest.approx(1.4669, abs=5e-5)
    assert p.variance == pytest.approx(INFLATION * p.mu_sd**2, rel=1e-15)


@pytest.mark.parametrize("k,m", [(2, 200), (1.5, 50), (3, 1), (2, 7)])
def test_leaf_prior_calibration_equations(k, m):
    p = calibrate_leaf_prior("bart", k, m)
    assert m * p.mu_mean - k * math.sqrt(m) * p.mu_sd == pytest.approx(-0.5, abs=1e-15)
    assert m * p.mu_mean + k * math.sqrt(m) * p.mu_sd == pytest.approx(0.5, abs=1e-15)


def test_leaf_log_prior_mode_symmetry_and_mass():
    p = LeafPriorParams(0.1, 0.3, INFLATION)
    assert leaf_log_prior(0.1, p) == pytest.approx(-0.5 * math.log(2 * math.pi * INFLATION * 0.09), abs=1e-14)
    assert leaf_log_prior(0.1 + 0.7, p) == pytest.approx(leaf_log_prior(0.1 - 0.7, p), abs=1e-14)
    mass, _ = integrate.quad(lambda u: math.exp(leaf_log_prior(u, p)), -10, 10, epsabs=1e-12, limit=200)
    assert abs(mass - 1) < 1e-6


def test_sigma_prior_lambda():
    y = np.random.default_rng(0).uniform(-0.5, 0.5, 400)
    sp = calibrate_sigma_prior(y, 3, 0.9)
    sigma_hat = np.std(y, ddof=1)
    chi2_q = 2 * gammaincinv(1.5, 0.1)  # 10% point of chi-square(3)
    assert sp.lam == pytest.approx(sigma_hat**2 * chi2_q / 3, rel=1e-12)


def test_sigma_prior_example_value():
    # two points at +-a have sample sd a*sqrt(2); pick a so the sd is 0.2887
    a = 0.2887 / math.sqrt(2)
    sp = calibrate_sigma_prior([-a, a], 3, 0.9)
    assert sp.sigma_hat == pytest.approx(0.2887, rel=1e-14)
    assert sp.lam == pytest.approx(0.2887**2 * 2 * gammaincinv(1.5, 0.1) / 3, rel=1e-12)


def test_sigma_prior_q_to_one():
    y = np.linspace(-0.5, 0.5, 11)
    assert calibrate_sigma_prior(y, 3, 1 - 1e-9).lam < 1e-5


def test_sigma_prior_forward_check():
    y = np.random.default_rng(2).uniform(-0.5, 0.5, 200)
    sp = calibrate_sigma_prior(y, 3, 0.9)
    rng = np.random.default_rng(3)
    sig2 = sp.nu * sp.lam / rng.chisquare(sp.nu, 100_000)
    assert abs(np.mean(np.sqrt(sig2) < sp.sigma_hat) - 0.9) < 0.01


def test_sigma_prior_zero_sd():
    with pytest.raises(ValueError):
        calibrate_sigma_prior(np.zeros(5))
