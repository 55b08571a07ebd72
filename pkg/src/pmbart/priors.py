"""Prior densities and hyperparameter calibration for the BART variants."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import chi2

from .data import CutpointGrid, DataError
from .tree import Tree, node_depth

INFLATION = math.pi / (math.pi - 1.0)


@dataclass(frozen=True)
class TreePriorParams:
    alpha: float = 0.95
    beta: float = 2.0
    max_depth: int | None = None

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.beta < 0:
            raise ValueError(f"beta must be nonnegative, got {self.beta}")


@dataclass(frozen=True)
class LeafPriorParams:
    mu_mean: float
    mu_sd: float
    inflation: float = 1.0

    @property
    def variance(self) -> float:
        """Prior variance of a single leaf value, inflation included."""
        return self.inflation * self.mu_sd**2


@dataclass(frozen=True)
class SigmaPriorParams:
    nu: float
    lam: float
    sigma_hat: float = math.nan


@dataclass(frozen=True)
class Priors:
    tree: TreePriorParams
    leaf: LeafPriorParams
    sigma: SigmaPriorParams | None = None


def split_probability(d: int, p: TreePriorParams) -> float:
    """Prior probability that a node at depth ``d`` is internal: ``alpha (1 + d)^-beta``."""
    if p.max_depth is not None and d >= p.max_depth:
        return 0.0
    return p.alpha * (1.0 + d) ** (-p.beta)


def available_splits(t: Tree, node: int, grid: CutpointGrid) -> list[tuple[int, int, int]]:
    """``(var, start, stop)`` for every variable with grid cutpoints inside the node's cell."""
    out = []
    for v in range(len(grid)):
        start, stop = t.cut_index_range(node, v, len(grid[v]))
        if stop > start:
            out.append((v, start, stop))
    return out


def node_log_prior_as_leaf(t: Tree, node: int, grid: CutpointGrid, p: TreePriorParams) -> float:
    if not available_splits(t, node, grid):
        return 0.0
    ps = split_probability(node_depth(node), p)
    return math.log1p(-ps) if ps < 1 else -math.inf


def tree_log_prior(t: Tree, p: TreePriorParams, grid: CutpointGrid) -> float:
    """Log prior probability of the tree structure.

    Each internal node contributes its split probability times a uniform
    choice of variable and of cutpoint among those available inside its
    cell. A leaf contributes the probability of not splitting, or 1 when
    its cell admits no split at all.
    """
    total = 0.0
    for k, rule in t.splits.items():
        avail = available_splits(t, k, grid)
        counts = {v: stop - start for v, start, stop in avail}
        if rule.var not in counts:
            return -math.inf
        ps = split_probability(node_depth(k), p)
        if ps <= 0:
            return -math.inf
        total += math.log(ps) - math.log(len(avail)) - math.log(counts[rule.var])
    for k in t.values:
        total += node_log_prior_as_leaf(t, k, grid, p)
    return total


def calibrate_leaf_prior(variant, k: float = 2.0, m: int = 200) -> LeafPriorParams:
    """Leaf prior so the sum of ``m`` leaves spans the outcome range with ``k`` sds.

    The continuous scale solves ``m mu - k sqrt(m) sd = -0.5`` and
    ``m mu + k sqrt(m) sd = 0.5``; the probit scale targets (-3, 3).
    """
    from .model import ModelVariant

    variant = ModelVariant.parse(variant)
    if k <= 0 or m < 1:
        raise ValueError("need k > 0 and m >= 1")
    half_range = 3.0 if variant.probit else 0.5
    return LeafPriorParams(
        mu_mean=0.0,
        mu_sd=half_range / (k * math.sqrt(m)),
        inflation=INFLATION if variant.monotone else 1.0,
    )


def leaf_log_prior(mu: float, params: LeafPriorParams) -> float:
    var = params.variance
    return -0.5 * math.log(2 * math.pi * var) - 0.5 * (mu - params.mu_mean) ** 2 / var


def calibrate_sigma_prior(y, nu: float = 3.0, q: float = 0.90) -> SigmaPriorParams:
    """Scaled inverse chi-square prior putting mass ``q`` below the sample sd of ``y``."""
    y = np.asarray(y, dtype=float)
    if y.size < 2:
        raise DataError("need at least two outcomes to estimate sigma")
    sigma_hat = float(np.std(y, ddof=1))
    if not sigma_hat > 0:
        raise DataError("outcome has zero sample standard deviation")
    if not 0 < q < 1 or nu <= 0:
        raise ValueError("need nu > 0 and q in (0, 1)")
    lam = sigma_hat**2 * chi2.ppf(1 - q, nu) / nu
    return SigmaPriorParams(nu=nu, lam=float(lam), sigma_hat=sigma_hat)
