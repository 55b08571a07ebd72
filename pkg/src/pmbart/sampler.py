"""MCMC for sum-of-trees models: continuous, probit, and their monotone versions.

One sweep updates, in order: the probit latent variables, each tree in
turn (a birth/death Metropolis-Hastings step on its structure followed by a
Gibbs pass over its leaf values), and the noise scale for continuous models.

Monotone models restrict every tree's leaf values to the set where the tree
is nondecreasing in the constrained coordinates. The leaf prior given a tree
is the product of independent normals conditioned on that set, so it carries
the normalizing constant ``Z(T) = P(independent normals satisfy the
constraints)``. Because the leaf values are exchangeable a priori, ``Z(T)``
equals the number of linear extensions of the leaves' domination order
divided by ``b!``, which keeps the Metropolis-Hastings ratio exact.

Leaf values created by a birth, or by a death, are proposed from their
truncated conditional posteriors given all other leaves. With that choice
the ratio of target to proposal for a leaf collapses to its marginal
likelihood constant times the normal mass of its truncation interval.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import truncnorm
from .data import CutpointGrid, Dataset, DataError, compute_offset, make_cutpoint_grid, scale_outcome
from .model import ModelConfig, ModelVariant
from .priors import (
    Priors,
    calibrate_leaf_prior,
    calibrate_sigma_prior,
    split_probability,
)
from .tree import (
    SplitRule,
    Tree,
    birth,
    count_linear_extensions,
    death,
    dominance_matrix,
    leaf_cells,
    node_depth,
)

log = logging.getLogger(__name__)

MAX_DEPTH = 60


@dataclass
class MoveCounts:
    birth_proposed: int = 0
    birth_accepted: int = 0
    death_proposed: int = 0
    death_accepted: int = 0
    skipped: int = 0

    def as_tuple(self):
        return (
            self.birth_proposed,
            self.birth_accepted,
            self.death_proposed,
            self.death_accepted,
            self.skipped,
        )


@dataclass
class _Order:
    """Domination order among a tree's leaves and its log normalizing constant.

    ``below[k]`` lists the leaves whose values may not exceed leaf ``k``'s,
    ``above[k]`` those that may not fall below it.
    """

    leaves: tuple[int, ...]
    D: np.ndarray
    log_z: float
    below: dict[int, tuple[int, ...]]
    above: dict[int, tuple[int, ...]]


@dataclass
class SamplerState:
    """Complete, exclusively owned state of one chain.

    ``X`` holds covariates already sign-flipped for nonincreasing
    coordinates, so every constraint is "nondecreasing". ``target`` is the
    scaled outcome for continuous models; for probit models the working
    response is ``z - offset``.
    """

    variant: ModelVariant
    X: np.ndarray
    y: np.ndarray
    grid: CutpointGrid
    priors: Priors
    monotone: tuple[int, ...]
    forest: list[Tree]
    leaf_of: np.ndarray
    tree_fit: np.ndarray
    fit: np.ndarray
    rng: np.random.Generator
    z: np.ndarray | None = None
    sigma: float = 1.0
    offset: float = 0.0
    prior_only: bool = False
    counts: MoveCounts = field(default_factory=MoveCounts)
    cut_ranges: list[dict[int, tuple[np.ndarray, bool]]] = field(default_factory=list)
    orders: list[_Order | None] = field(default_factory=list)
    order_cache: dict = field(default_factory=dict)

    @property
    def m(self) -> int:
        return len(self.forest)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def noise_sd(self) -> float:
        return 1.0 if self.variant.probit else self.sigma

    def working_response(self) -> np.ndarray:
        if self.variant.probit:
            return self.z - self.offset
        return self.y

    def residual(self, j: int) -> np.ndarray:
        return self.working_response() - self.fit + self.tree_fit[j]

    def recompute_fit(self) -> np.ndarray:
        return sum(t.predict(self.X) for t in self.forest)


def _transform_covariates(X: np.ndarray, monotone: dict[int, int]) -> np.ndarray:
    X = np.array(X, dtype=float)
    for p, sign in monotone.items():
        if not 0 <= p < X.shape[1]:
            raise DataError(f"monotone coordinate {p} out of range for {X.shape[1]} covariates")
        if sign < 0:
            X[:, p] = -X[:, p]
    return X


def direction_vector(cfg: ModelConfig, n_vars: int) -> np.ndarray:
    signs = np.ones(n_vars)
    for p, s in cfg.monotone.items():
        signs[p] = s
    return signs


def build_priors(d: Dataset, cfg: ModelConfig) -> Priors:
    sigma = None
    if not cfg.variant.probit:
        sigma = calibrate_sigma_prior(d.y, cfg.nu, cfg.q)
    return Priors(cfg.tree_prior, calibrate_leaf_prior(cfg.variant, cfg.k, cfg.m), sigma)


def init_state(d: Dataset, cfg: ModelConfig, init_forest: list[Tree] | None = None) -> SamplerState:
    """Fresh chain state: root-only trees at zero (or ``init_forest``).

    ``d`` must already be on the model scale: 0/1 outcomes for probit
    variants, outcomes scaled to [-0.5, 0.5] otherwise.
    """
    variant = cfg.variant
    if variant.probit:
        d.check_binary()
    X = _transform_covariates(d.X, cfg.monotone)
    grid = make_cutpoint_grid(Dataset(X, d.y), cfg.num_cut)
    priors = build_priors(d, cfg)
    rng = np.random.default_rng(cfg.seed)
    if init_forest is None:
        forest = [Tree.root() for _ in range(cfg.m)]
    else:
        forest = list(init_forest)
        if len(forest) != cfg.m:
            raise ValueError(f"init_forest has {len(forest)} trees, config asks for {cfg.m}")
    leaf_of = np.array([t.leaf_of(X) for t in forest], dtype=np.int64).reshape(len(forest), -1)
    tree_fit = np.array([t.predict(X) for t in forest]).reshape(len(forest), -1)
    state = SamplerState(
        variant=variant,
        X=X,
        y=np.asarray(d.y, dtype=float),
        grid=grid,
        priors=priors,
        monotone=tuple(sorted(cfg.monotone)),
        forest=forest,
        leaf_of=leaf_of,
        tree_fit=tree_fit,
        fit=tree_fit.sum(axis=0),
        rng=rng,
        prior_only=cfg.prior_only,
    )
    if variant.probit:
        state.offset = compute_offset(d.y)
        state.z = np.zeros(d.n)
        draw_latent_z(state)
    else:
        state.sigma = priors.sigma.sigma_hat
    for j in range(state.m):
        state.cut_ranges.append({k: _valid_cut_ranges(state, state.leaf_of[j] == k) for k in forest[j].leaves})
        state.orders.append(_order(state, forest[j]))
    return state


# ---------------------------------------------------------------- leaf algebra


def _valid_cut_ranges(state: SamplerState, mask: np.ndarray) -> tuple[np.ndarray, bool]:
    """Per variable, the ``[start, stop)`` grid indices that leave data on both sides.

    The flag tells whether any variable admits such a cut.
    """
    ranges = np.zeros((len(state.grid), 2), dtype=np.int64)
    if not mask.any():
        return ranges, False
    xs = state.X[mask]
    lo, hi = xs.min(axis=0), xs.max(axis=0)
    ok = False
    for p, cuts in enumerate(state.grid.cuts):
        start = int(np.searchsorted(cuts, lo[p], side="left"))
        stop = int(np.searchsorted(cuts, hi[p], side="left"))
        ranges[p, 0], ranges[p, 1] = start, stop
        ok = ok or stop > start
    return ranges, ok


def _conditional(n: float, s: float, noise_var: float, prior_mean: float, prior_var: float):
    """Posterior mean, variance and log marginal-likelihood constant of one leaf."""
    var = 1.0 / (n / noise_var + 1.0 / prior_var)
    mean = var * (s / noise_var + prior_mean / prior_var)
    log_k = 0.5 * math.log(var / prior_var) + 0.5 * mean * mean / var - 0.5 * prior_mean**2 / prior_var
    return mean, var, log_k


def _stats(state: SamplerState, resid: np.ndarray, mask: np.ndarray) -> tuple[float, float]:
    if state.prior_only:
        return 0.0, 0.0
    return float(np.count_nonzero(mask)), float(resid[mask].sum())


ORDER_CACHE_SIZE = 50_000


def _order(state: SamplerState, t: Tree) -> _Order | None:
    if not state.monotone:
        return None
    key = tuple(sorted((k, r.var, r.cut_index) for k, r in t.splits.items()))
    cached = state.order_cache.get(key)
    if cached is not None:
        return cached
    cells = leaf_cells(t, state.X.shape[1])
    D = dominance_matrix(cells, state.monotone)
    b = len(cells)
    ext = count_linear_extensions(D)
    log_z = (math.log(ext) if ext > 0 else -math.inf) - math.lgamma(b + 1)
    leaves = t.leaves
    below = {k: tuple(leaves[a] for a in np.flatnonzero(D[:, i])) for i, k in enumerate(leaves)}
    above = {k: tuple(leaves[c] for c in np.flatnonzero(D[i, :])) for i, k in enumerate(leaves)}
    order = _Order(leaves, D, log_z, below, above)
    if len(state.order_cache) >= ORDER_CACHE_SIZE:
        state.order_cache.clear()
    state.order_cache[key] = order
    return order


def _bounds(order: _Order | None, leaf: int, values: dict[int, float]) -> tuple[float, float]:
    """Interval for ``leaf`` implied by the other leaves' values; NaN or absent values are ignored."""
    if order is None:
        return -math.inf, math.inf
    lower, upper = -math.inf, math.inf
    for a in order.below[leaf]:
        v = values.get(a, math.nan)
        if v > lower:
            lower = v
    for c in order.above[leaf]:
        v = values.get(c, math.nan)
        if v < upper:
            upper = v
    return lower, upper


def _leaf_prior_term(t: Tree, node: int, grid_ranges, state: SamplerState) -> float:
    """Log prior contribution of ``node`` as a leaf, given its grid ranges."""
    if not any(stop > start for start, stop in grid_ranges):
        return 0.0
    ps = split_probability(node_depth(node), state.priors.tree)
    return math.log1p(-ps) if ps < 1 else -math.inf


def _grid_ranges(t: Tree, node: int, grid: CutpointGrid) -> list[tuple[int, int]]:
    return [t.cut_index_range(node, v, len(grid[v])) for v in range(len(grid))]


def _split_prior_term(t: Tree, node: int, rule: SplitRule, state: SamplerState) -> float:
    """Log prior of ``node`` being split by ``rule`` rather than being a leaf, in tree ``t``.

    ``t`` is any tree in which ``node`` has the same cell; the result is
    ``log p(split tree) - log p(tree with node as leaf)``.
    """
    tp = state.priors.tree
    d = node_depth(node)
    ranges = _grid_ranges(t, node, state.grid)
    n_avail = sum(stop > start for start, stop in ranges)
    start, stop = ranges[rule.var]
    ps = split_probability(d, tp)
    if ps <= 0 or n_avail == 0 or stop <= start:
        return -math.inf
    term = math.log(ps) - math.log(n_avail) - math.log(stop - start)
    left = list(ranges)
    left[rule.var] = (start, rule.cut_index)
    right = list(ranges)
    right[rule.var] = (rule.cut_index + 1, stop)
    term += _leaf_prior_term(t, 2 * node + 1, left, state)
    term += _leaf_prior_term(t, 2 * node + 2, right, state)
    term -= _leaf_prior_term(t, node, ranges, state)
    return term


def _growable(state: SamplerState, j: int, t: Tree) -> list[int]:
    tp = state.priors.tree
    out = []
    for k in t.leaves:
        if node_depth(k) >= MAX_DEPTH or split_probability(node_depth(k), tp) <= 0:
            continue
        if state.cut_ranges[j][k][1]:
            out.append(k)
    return out


def _birth_probability(n_growable: int, n_nog: int) -> float:
    if n_growable == 0:
        return 0.0
    return 1.0 if n_nog == 0 else 0.5


# ---------------------------------------------------------------- kernels


def draw_latent_z(state: SamplerState) -> np.ndarray:
    """Refresh probit latents: ``z_i ~ N(G(x_i) + c, 1)`` truncated to the side given by ``y_i``."""
    mean = state.fit + state.offset
    pos = state.y == 1
    a = np.where(pos, -mean, mean)
    excess = truncnorm.sample_above(state.rng, a)
    z = np.where(pos, np.maximum(excess, np.finfo(float).tiny), -excess)
    state.z = z
    return z


def draw_sigma(state: SamplerState) -> float:
    """Conjugate draw ``sigma^2 ~ (nu lambda + SSR) / chi2(nu + n)``."""
    sp = state.priors.sigma
    if state.prior_only:
        ssr, n = 0.0, 0
    else:
        r = state.y - state.fit
        ssr, n = float(r @ r), state.n
    state.sigma = math.sqrt((sp.nu * sp.lam + ssr) / state.rng.chisquare(sp.nu + n))
    return state.sigma


def tree_move(state: SamplerState, j: int, resid: np.ndarray | None = None) -> bool:
    """One birth-or-death Metropolis-Hastings step on tree ``j``; returns acceptance.

    ``resid`` is the partial residual excluding tree ``j``, recomputed if omitted.
    """
    if resid is None:
        resid = state.residual(j)
    t = state.forest[j]
    growable = _growable(state, j, t)
    nogs = t.nog_nodes
    pb = _birth_probability(len(growable), len(nogs))
    if not growable and not nogs:
        state.counts.skipped += 1
        return False
    if state.rng.random() < pb:
        return _birth(state, j, t, resid, growable, pb)
    return _death(state, j, t, resid, growable, nogs, 1.0 - pb)


def _birth(state: SamplerState, j: int, t: Tree, resid: np.ndarray, growable: list[int], pb: float) -> bool:
    rng = state.rng
    state.counts.birth_proposed += 1
    leaf = growable[rng.integers(len(growable))]
    ranges = state.cut_ranges[j][leaf][0]
    vars_ok = np.flatnonzero(ranges[:, 1] > ranges[:, 0])
    v = int(vars_ok[rng.integers(len(vars_ok))])
    c = int(rng.integers(ranges[v, 0], ranges[v, 1]))
    rule = SplitRule(v, c, float(state.grid[v][c]))

    log_ratio = _split_prior_term(t, leaf, rule, state)
    if log_ratio == -math.inf:
        return False
    new = birth(t, leaf, rule, math.nan, math.nan)
    left, right = 2 * leaf + 1, 2 * leaf + 2

    in_leaf = state.leaf_of[j] == leaf
    go_left = state.X[:, v] <= rule.cut_value
    m_left, m_right = in_leaf & go_left, in_leaf & ~go_left
    noise_var = state.noise_sd**2
    lp = state.priors.leaf
    mean_l, var_l, k_l = _conditional(*_stats(state, resid, m_left), noise_var, lp.mu_mean, lp.variance)
    mean_r, var_r, k_r = _conditional(*_stats(state, resid, m_right), noise_var, lp.mu_mean, lp.variance)
    mean_p, var_p, k_p = _conditional(*_stats(state, resid, in_leaf), noise_var, lp.mu_mean, lp.variance)

    old_order = state.orders[j]
    new_order = _order(state, new)
    others = {k: mu for k, mu in t.values.items() if k != leaf}
    lo, hi = _bounds(new_order, left, others)
    if not lo < hi:
        return False
    mu_l = truncnorm.sample(rng, mean_l, math.sqrt(var_l), lo, hi)
    lmass_l = truncnorm.log_mass_scaled(mean_l, math.sqrt(var_l), lo, hi)
    others[left] = mu_l
    lo, hi = _bounds(new_order, right, others)
    if not lo < hi:
        # with several constrained coordinates mu_l can leave no room for the
        # right child; the proposal fails and the state stays put
        return False
    mu_r = truncnorm.sample(rng, mean_r, math.sqrt(var_r), lo, hi)
    lmass_r = truncnorm.log_mass_scaled(mean_r, math.sqrt(var_r), lo, hi)
    del others[left]
    lo, hi = _bounds(old_order, leaf, others)
    lmass_p = truncnorm.log_mass_scaled(mean_p, math.sqrt(var_p), lo, hi)

    log_ratio += k_l + lmass_l + k_r + lmass_r - k_p - lmass_p
    if new_order is not None:
        log_ratio += old_order.log_z - new_order.log_z

    # proposal: pick leaf, variable, cut; reverse picks one nog node
    n_nog_new = len(new.nog_nodes)
    range_l = _valid_cut_ranges(state, m_left)
    range_r = _valid_cut_ranges(state, m_right)
    n_grow_new = len(growable) - 1 + _is_growable(state, left, range_l[1]) + _is_growable(state, right, range_r[1])
    pd_new = 1.0 - _birth_probability(n_grow_new, n_nog_new)
    log_ratio += math.log(pd_new / n_nog_new) - math.log(
        pb / (len(growable) * len(vars_ok) * (ranges[v, 1] - ranges[v, 0]))
    )

    if not _accept(rng, log_ratio):
        return False
    values = dict(new.values)
    values[left], values[right] = mu_l, mu_r
    new = new.with_values(values)
    new_leaf_of = state.leaf_of[j].copy()
    new_leaf_of[m_left] = left
    new_leaf_of[m_right] = right
    cuts = state.cut_ranges[j]
    del cuts[leaf]
    cuts[left], cuts[right] = range_l, range_r
    _install(state, j, new, new_leaf_of, new_order)
    state.counts.birth_accepted += 1
    return True


def _is_growable(state: SamplerState, node: int, has_split: bool) -> int:
    d = node_depth(node)
    if not has_split or d >= MAX_DEPTH or split_probability(d, state.priors.tree) <= 0:
        return 0
    return 1


def _death(state: SamplerState, j: int, t: Tree, resid: np.ndarray, growable: list[int], nogs, pd: float) -> bool:
    rng = state.rng
    state.counts.death_proposed += 1
    node = nogs[rng.integers(len(nogs))]
    rule = t.splits[node]
    left, right = 2 * node + 1, 2 * node + 2
    new = death(t, node, math.nan)

    log_ratio = -_split_prior_term(new, node, rule, state)

    m_left = state.leaf_of[j] == left
    m_right = state.leaf_of[j] == right
    merged = m_left | m_right
    noise_var = state.noise_sd**2
    lp = state.priors.leaf
    mean_l, var_l, k_l = _conditional(*_stats(state, resid, m_left), noise_var, lp.mu_mean, lp.variance)
    mean_r, var_r, k_r = _conditional(*_stats(state, resid, m_right), noise_var, lp.mu_mean, lp.variance)
    mean_p, var_p, k_p = _conditional(*_stats(state, resid, merged), noise_var, lp.mu_mean, lp.variance)

    old_order = state.orders[j]
    new_order = _order(state, new)
    others = {k: mu for k, mu in t.values.items() if k not in (left, right)}
    lo, hi = _bounds(new_order, node, others)
    if not lo < hi:
        # neighbours of the two children may squeeze the merged leaf to nothing
        return False
    mu_p = truncnorm.sample(rng, mean_p, math.sqrt(var_p), lo, hi)
    lmass_p = truncnorm.log_mass_scaled(mean_p, math.sqrt(var_p), lo, hi)
    lo, hi = _bounds(old_order, left, others)
    lmass_l = truncnorm.log_mass_scaled(mean_l, math.sqrt(var_l), lo, hi)
    others[left] = t.values[left]
    lo, hi = _bounds(old_order, right, others)
    lmass_r = truncnorm.log_mass_scaled(mean_r, math.sqrt(var_r), lo, hi)

    log_ratio += k_p + lmass_p - k_l - lmass_l - k_r - lmass_r
    if new_order is not None:
        log_ratio += old_order.log_z - new_order.log_z

    range_p = _valid_cut_ranges(state, merged)
    n_grow_new = (
        len(growable)
        - _is_growable(state, left, state.cut_ranges[j][left][1])
        - _is_growable(state, right, state.cut_ranges[j][right][1])
        + 1
    )
    n_nog_new = len(new.nog_nodes)
    pb_new = _birth_probability(n_grow_new, n_nog_new)
    rp = range_p[0]
    n_vars_ok = int(np.count_nonzero(rp[:, 1] > rp[:, 0]))
    n_cuts = int(rp[rule.var, 1] - rp[rule.var, 0])
    log_ratio += math.log(pb_new / (n_grow_new * n_vars_ok * n_cuts)) - math.log(pd / len(nogs))

    if not _accept(rng, log_ratio):
        return False
    values = dict(new.values)
    values[node] = mu_p
    new = new.with_values(values)
    new_leaf_of = state.leaf_of[j].copy()
    new_leaf_of[merged] = node
    cuts = state.cut_ranges[j]
    del cuts[left], cuts[right]
    cuts[node] = range_p
    _install(state, j, new, new_leaf_of, new_order)
    state.counts.death_accepted += 1
    return True


def _accept(rng: np.random.Generator, log_ratio: float) -> bool:
    if math.isnan(log_ratio):
        raise FloatingPointError("NaN Metropolis-Hastings ratio")
    return log_ratio >= 0 or math.log(rng.random()) < log_ratio


def _install(state: SamplerState, j: int, t: Tree, leaf_of: np.ndarray, order: _Order | None):
    state.forest[j] = t
    state.leaf_of[j] = leaf_of
    state.orders[j] = order
    _refresh_tree_fit(state, j)


def _refresh_tree_fit(state: SamplerState, j: int):
    t = state.forest[j]
    leaves = np.array(t.leaves, dtype=np.int64)
    vals = np.array([t.values[k] for k in t.leaves])
    new_fit = vals[np.searchsorted(leaves, state.leaf_of[j])]
    state.fit += new_fit - state.tree_fit[j]
    state.tree_fit[j] = new_fit


def gibbs_leaves(state: SamplerState, j: int, resid: np.ndarray | None = None) -> Tree:
    """Redraw every leaf value of tree ``j`` from its (truncated) full conditional.

    Leaves are visited in a uniformly random order; each draw conditions on
    the current values of the others through the domination bounds.
    """
    t = state.forest[j]
    rng = state.rng
    if resid is None:
        resid = state.residual(j)
    noise_var = state.noise_sd**2
    lp = state.priors.leaf
    leaves = np.array(t.leaves, dtype=np.int64)
    pos = np.searchsorted(leaves, state.leaf_of[j])
    if state.prior_only:
        counts = np.zeros(len(leaves))
        sums = np.zeros(len(leaves))
    else:
        counts = np.bincount(pos, minlength=len(leaves)).astype(float)
        sums = np.bincount(pos, weights=resid, minlength=len(leaves))
        if np.any(counts == 0):
            raise RuntimeError(f"tree {j} has a leaf without observations")
    order = state.orders[j]
    post_var = 1.0 / (counts / noise_var + 1.0 / lp.variance)
    post_mean = post_var * (sums / noise_var + lp.mu_mean / lp.variance)
    if order is None:
        draws = post_mean + np.sqrt(post_var) * rng.standard_normal(len(leaves))
        values = dict(zip(t.leaves, draws.tolist()))
    else:
        values = dict(t.values)
        for i in rng.permutation(len(leaves)):
            k = t.leaves[i]
            lo, hi = _bounds(order, k, values)
            values[k] = truncnorm.sample(rng, float(post_mean[i]), math.sqrt(post_var[i]), lo, hi)
    new = Tree(t.splits, values)
    state.forest[j] = new
    _refresh_tree_fit(state, j)
    return new


# ---------------------------------------------------------------- driver


def sweep(state: SamplerState, update_structure: bool = True):
    if state.variant.probit:
        draw_latent_z(state)
    for j in range(state.m):
        resid = state.residual(j)
        if update_structure:
            tree_move(state, j, resid)
        gibbs_leaves(state, j, resid)
    if not state.variant.probit:
        draw_sigma(state)


def prepare(d: Dataset, cfg: ModelConfig):
    """Validate ``d`` for the variant and put the outcome on the model scale."""
    if cfg.variant.probit:
        d.check_binary()
        return d, None
    return scale_outcome(d)


def run_mcmc(d: Dataset, cfg: ModelConfig, init_forest: list[Tree] | None = None, progress=None):
    """Run one chain and return its retained draws.

    ``d`` is on the original scale; continuous outcomes are rescaled here
    and predictions are mapped back. Deterministic given ``cfg.seed``.
    """
    from .posterior import PosteriorDraws

    work, scaling = prepare(d, cfg)
    state = init_state(work, cfg, init_forest)
    total = cfg.burn_in + cfg.keep * cfg.thin
    forests, sigmas, kept_iters = [], [], []
    trace_rows = []
    for it in range(total):
        before = state.counts.as_tuple()
        sweep(state, cfg.update_structure)
        after = state.counts.as_tuple()
        mean_depth = float(np.mean([t.depth for t in state.forest]))
        trace_rows.append(
            (it, state.sigma if not cfg.variant.probit else math.nan)
            + tuple(a - b for a, b in zip(after, before))
            + (mean_depth,)
        )
        if it >= cfg.burn_in and (it - cfg.burn_in + 1) % cfg.thin == 0:
            forests.append(list(state.forest))
            sigmas.append(state.sigma)
            kept_iters.append(it)
        if progress is not None:
            progress(it, state)
    return PosteriorDraws(
        variant=cfg.variant,
        forests=forests,
        offset=state.offset,
        scaling=scaling,
        sigma=np.array(sigmas) if not cfg.variant.probit else None,
        grid=state.grid,
        directions=direction_vector(cfg, d.P),
        config=cfg,
        column_names=d.column_names,
        trace=np.array(trace_rows, dtype=float),
        kept_iterations=np.array(kept_iters, dtype=np.int64),
        reference=np.median(d.X, axis=0),
    )
