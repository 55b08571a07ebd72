"""A single fixed split, ten observations: Gibbs output against brute-force quadrature.

This is the smallest setting where the monotone constraint bites. The
sampler's leaf draws use latent normals and truncated conditionals; the
reference integrates the exact Bernoulli likelihood over the ordered half
plane mu_left <= mu_right. The two posterior means should agree to Monte
Carlo error.
"""

import math

import numpy as np

from pmbart import ModelConfig, SplitRule, Tree, calibrate_leaf_prior, make_cutpoint_grid
from pmbart.oracle import fixed_tree_posterior
from pmbart.sampler import init_state, sweep
from pmbart.simulation import simulate

data = simulate(10, seed=7)
grid = make_cutpoint_grid(data, 100)
cut = int(np.searchsorted(grid[0], 0.0))
tree = Tree({0: SplitRule(0, cut, float(grid[0][cut]))}, {1: 0.0, 2: 0.0})
print("x:", np.round(np.sort(data.X[:, 0]), 2))
print("y:", data.y[np.argsort(data.X[:, 0])].astype(int))

for variant, mono in (("pbart", ()), ("pmbart", (0,))):
    cfg = ModelConfig(variant=variant, m=1, update_structure=False, seed=5, monotone={0: 1} if mono else {})
    state = init_state(data, cfg, [tree])
    draws = np.empty((20_000, 2))
    for i in range(-1000, len(draws)):
        sweep(state, update_structure=False)
        if i >= 0:
            draws[i] = state.forest[0].values[1], state.forest[0].values[2]
    leaf = calibrate_leaf_prior(variant, cfg.k, cfg.m)
    ref = fixed_tree_posterior(data.X, data.y, tree, probit=True, prior_sd=math.sqrt(leaf.variance), monotone=mono, offset=state.offset)
    se = draws.reshape(40, -1, 2).mean(axis=1).std(axis=0, ddof=1) / math.sqrt(40)
    print(f"{variant:7s} gibbs={np.round(draws.mean(axis=0), 4)} +- {np.round(se, 4)}   quadrature={np.round(ref.means, 4)}")
