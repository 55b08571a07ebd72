"""Brute-force and closed-form reference computations for validating the sampler.

Nothing here calls the sampler's numeric kernels. Normal tail quantities
come from mpmath or ``erfc``, leaf membership and the monotone order are
found by probing points, and constrained integrals are done by quadrature.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import mpmath
import numpy as np
from scipy.special import erfc

from .tree import Tree, evaluate


class QuadratureError(RuntimeError):
    pass


def truncated_normal_moments(mean: float, sd: float, lo: float, hi: float) -> tuple[float, float]:
    """Mean and variance of N(mean, sd^2) restricted to [lo, hi], in 50-digit arithmetic."""
    if not lo < hi:
        raise ValueError(f"degenerate interval [{lo}, {hi}]")
    if not sd > 0:
        raise ValueError("sd must be positive")
    with mpmath.workdps(50):
        m, s = mpmath.mpf(mean), mpmath.mpf(sd)
        a = (mpmath.mpf(lo) - m) / s if math.isfinite(lo) else None
        b = (mpmath.mpf(hi) - m) / s if math.isfinite(hi) else None
        pdf = lambda t: mpmath.npdf(t) if t is not None else mpmath.mpf(0)  # noqa: E731
        tpdf = lambda t: t * mpmath.npdf(t) if t is not None else mpmath.mpf(0)  # noqa: E731
        # upper-tail form keeps the mass accurate far to the right
        if a is not None and a > 0:
            mass = mpmath.ncdf(-a) - (mpmath.ncdf(-b) if b is not None else 0)
        else:
            mass = (mpmath.ncdf(b) if b is not None else 1) - (mpmath.ncdf(a) if a is not None else 0)
        ratio = (pdf(a) - pdf(b)) / mass
        mu = m + s * ratio
        var = s**2 * (1 + (tpdf(a) - tpdf(b)) / mass - ratio**2)
        return float(mu), float(var)


def _log_phi(x):
    """log of the standard normal CDF through ``erfc`` (reference path)."""
    with np.errstate(divide="ignore"):
        return np.log(0.5 * erfc(-np.asarray(x, dtype=float) / math.sqrt(2.0)))


def _leaf_ids(t: Tree, X) -> np.ndarray:
    labelled = Tree(t.splits, {k: float(k) for k in t.values})
    return np.array([int(evaluate(labelled, x)) for x in np.atleast_2d(X)])


def probe_order(t: Tree, S, n_vars: int) -> set[tuple[int, int]]:
    """Pairs ``(a, b)`` of leaves where some point of ``a`` shifted up a coordinate in ``S`` lands in ``b``.

    Probe points sit at every cut value and between consecutive cut values,
    so each box of the arrangement of all splits is represented.
    """
    S = sorted(set(S))
    if not S or not t.splits:
        return set()
    reps = []
    for p in range(n_vars):
        cuts = sorted({r.cut_value for r in t.splits.values() if r.var == p})
        if not cuts:
            reps.append([0.0])
            continue
        pts = [cuts[0] - 1.0]
        for lo, hi in zip(cuts, cuts[1:]):
            pts += [lo, 0.5 * (lo + hi)]
        pts += [cuts[-1], cuts[-1] + 1.0]
        reps.append(pts)
    labelled = Tree(t.splits, {k: float(k) for k in t.values})
    pairs = set()
    for x in itertools.product(*reps):
        x = np.array(x)
        here = int(evaluate(labelled, x))
        for i in S:
            for v in reps[i]:
                if v > x[i]:
                    x2 = x.copy()
                    x2[i] = v
                    there = int(evaluate(labelled, x2))
                    if there != here:
                        pairs.add((here, there))
    return pairs


@dataclass(frozen=True)
class FixedTreePosterior:
    leaves: tuple[int, ...]
    means: np.ndarray
    log_evidence: float


def _gauss_panels(lo: float, hi: float, panels: int, order: int = 8):
    nodes, weights = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    x = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    w = (half[:, None] * weights[None, :]).ravel()
    return x, w


def fixed_tree_posterior(
    X,
    y,
    tree: Tree,
    *,
    probit: bool,
    prior_sd: float,
    prior_mean: float = 0.0,
    monotone=(),
    offset: float = 0.0,
    sigma: float = 1.0,
    resolution: int = 16,
    check: bool = True,
) -> FixedTreePosterior:
    """Posterior means of the leaf values of a single fixed tree, by quadrature.

    Probit models use the exact Bernoulli likelihood ``Phi(mu + offset)``
    with no latent variables; continuous models use a normal likelihood
    with known ``sigma``. ``prior_sd`` is the full (already inflated) leaf
    prior sd. The constrained region is split into ordered chambers, one per
    leaf ordering compatible with the monotone order, and each chamber is
    integrated in increment coordinates with composite Gauss-Legendre rules.
    ``log_evidence`` is the log marginal likelihood under the truncated,
    renormalized leaf prior.
    """
    result = _fixed_tree_quadrature(X, y, tree, probit, prior_sd, prior_mean, monotone, offset, sigma, resolution)
    if check:
        finer = _fixed_tree_quadrature(
            X, y, tree, probit, prior_sd, prior_mean, monotone, offset, sigma, 2 * resolution
        )
        if np.max(np.abs(finer.means - result.means)) > 1e-6:
            raise QuadratureError(
                f"posterior means moved by {np.max(np.abs(finer.means - result.means)):.2e} "
                f"when doubling the resolution from {resolution}"
            )
        return finer
    return result


def _fixed_tree_quadrature(X, y, tree, probit, prior_sd, prior_mean, monotone, offset, sigma, resolution):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] == 1 and np.asarray(y).size > 1:
        X = X.T
    y = np.asarray(y, dtype=float)
    leaves = tree.leaves
    b = len(leaves)
    if b > 3:
        raise ValueError("the quadrature oracle handles at most 3 leaves")
    ids = _leaf_ids(tree, X)
    groups = [y[ids == k] for k in leaves]

    def log_f(k, mu):
        mu = np.asarray(mu, dtype=float)
        out = -0.5 * ((mu - prior_mean) / prior_sd) ** 2 - math.log(prior_sd * math.sqrt(2 * math.pi))
        for v in groups[k]:
            if probit:
                out = out + (_log_phi(mu + offset) if v == 1 else _log_phi(-(mu + offset)))
            else:
                out = out - 0.5 * ((v - mu) / sigma) ** 2 - math.log(sigma * math.sqrt(2 * math.pi))
        return out

    # window from each leaf's own unconstrained posterior
    fine = np.linspace(prior_mean - 12 * prior_sd, prior_mean + 12 * prior_sd, 20001)
    centers, spreads = [], []
    for k in range(b):
        lf = log_f(k, fine)
        w = np.exp(lf - lf.max())
        w /= w.sum()
        c = float(w @ fine)
        centers.append(c)
        spreads.append(math.sqrt(max(float(w @ (fine - c) ** 2), 1e-12)))
    lo = min(c - 12 * s for c, s in zip(centers, spreads))
    hi = max(c + 12 * s for c, s in zip(centers, spreads))

    pairs = probe_order(tree, monotone, X.shape[1] if monotone else 1) if monotone else set()
    pos = {k: i for i, k in enumerate(leaves)}
    chambers = [
        perm
        for perm in itertools.permutations(range(b))
        if all(perm.index(pos[a]) < perm.index(pos[c]) for a, c in pairs)
    ]
    prior_c = len(chambers) / math.factorial(b)

    u, wu = _gauss_panels(lo, hi, resolution)
    inc, winc = _gauss_panels(0.0, hi - lo, resolution)
    axes = [u] + [inc] * (b - 1)
    waxes = [wu] + [winc] * (b - 1)
    grids = np.meshgrid(*axes, indexing="ij")
    weight = np.ones_like(grids[0])
    for d, wa in enumerate(waxes):
        shape = [1] * b
        shape[d] = -1
        weight = weight * wa.reshape(shape)
    levels = [grids[0]]
    for d in range(1, b):
        levels.append(levels[-1] + grids[d])

    log_terms, moments = [], []
    for perm in chambers:
        # perm[r] is the leaf holding the r-th smallest value
        mu = [None] * b
        for rank, leaf_pos in enumerate(perm):
            mu[leaf_pos] = levels[rank]
        lf = sum(log_f(k, mu[k]) for k in range(b))
        shift = float(lf.max())
        dens = np.exp(lf - shift) * weight
        log_terms.append((shift, float(dens.sum())))
        moments.append([float((dens * mu[k]).sum()) for k in range(b)])
    top = max(s for s, _ in log_terms)
    total = sum(math.exp(s - top) * z for s, z in log_terms)
    means = np.array(
        [sum(math.exp(s - top) * mom[k] for (s, _), mom in zip(log_terms, moments)) / total for k in range(b)]
    )
    log_evidence = top + math.log(total) - math.log(prior_c)
    return FixedTreePosterior(leaves, means, log_evidence)


def pointwise_monotone_check(forest, S, num_pairs: int = 10_000, seed: int = 0, n_vars: int | None = None) -> bool:
    """Random search for a pair ``x, x + h e_i`` (``i`` in ``S``) where the forest decreases.

    Coordinates are drawn half the time uniformly over a box around all cut
    values and half the time exactly at a cut value, so boundaries are hit.
    """
    S = sorted(set(S))
    forest = list(forest)
    if not S:
        return True
    if n_vars is None:
        n_vars = max([r.var for t in forest for r in t.splits.values()] + S) + 1
    cuts = [sorted({r.cut_value for t in forest for r in t.splits.values() if r.var == p}) for p in range(n_vars)]
    rng = np.random.default_rng(seed)

    def draw(p):
        c = cuts[p]
        if c and rng.random() < 0.5:
            return c[rng.integers(len(c))]
        lo, hi = (c[0] - 1.0, c[-1] + 1.0) if c else (-1.0, 1.0)
        return rng.uniform(lo, hi)

    for _ in range(num_pairs):
        x = np.array([draw(p) for p in range(n_vars)])
        i = S[rng.integers(len(S))]
        x2 = x.copy()
        x2[i] = max(draw(i), x[i]) + (rng.exponential() if rng.random() < 0.5 else 0.0)
        if x2[i] <= x[i]:
            x2[i] = x[i] + rng.exponential()
        if sum(evaluate(t, x2) for t in forest) < sum(evaluate(t, x) for t in forest):
            return False
    return True


def forward_tree_prior(alpha: float, beta: float, grid, X=None, max_depth=None, rng=None, max_tries=10_000):
    """Draw one tree shape from the branching-process prior; returns (depth, n_leaves).

    A node splits with probability ``alpha (1 + d)^-beta`` if its cell has
    any grid cut, choosing variable and cut uniformly among those available.
    With ``X`` given, draws with an empty leaf are rejected and redrawn.
    """
    rng = rng if rng is not None else np.random.default_rng()
    X = None if X is None else np.atleast_2d(np.asarray(X, dtype=float))
    sizes = [len(c) for c in grid]
    for _ in range(max_tries):
        leaves = []
        stack = [(0, [(0, s) for s in sizes], None if X is None else np.ones(X.shape[0], bool))]
        while stack:
            d, ranges, mask = stack.pop()
            avail = [p for p, (a, b) in enumerate(ranges) if b > a]
            ps = 0.0 if (max_depth is not None and d >= max_depth) else alpha * (1 + d) ** (-beta)
            if avail and rng.random() < ps:
                p = avail[rng.integers(len(avail))]
                a, b = ranges[p]
                c = int(rng.integers(a, b))
                left, right = list(ranges), list(ranges)
                left[p], right[p] = (a, c), (c + 1, b)
                if mask is None:
                    lm = rm = None
                else:
                    go = X[:, p] <= grid[p][c]
                    lm, rm = mask & go, mask & ~go
                stack.append((d + 1, left, lm))
                stack.append((d + 1, right, rm))
            else:
                leaves.append((d, mask))
        if X is None or all(m.any() for _, m in leaves):
            return max(d for d, _ in leaves), len(leaves)
    raise RuntimeError("could not draw a tree without empty leaves")


def depth1_structure_posterior(
    X, y, grid, *, alpha, beta, probit, prior_sd, monotone=(), offset=0.0, sigma=1.0, resolution=24
) -> dict:
    """Exact posterior over single-tree shapes of depth at most one.

    Keys are ``None`` for the root-only tree and ``(var, cut_index)`` for a
    single split; only splits leaving data on both sides are allowed.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    from .tree import SplitRule

    options = []
    avail = [p for p in range(len(grid)) if len(grid[p]) > 0]
    ps = alpha
    log_post = {}
    root = Tree.root()
    ev = fixed_tree_posterior(X, y, root, probit=probit, prior_sd=prior_sd, offset=offset, sigma=sigma,
                              resolution=resolution, check=False).log_evidence
    log_post[None] = (math.log1p(-ps) if avail else 0.0) + ev
    for p in avail:
        for c, value in enumerate(grid[p]):
            go = X[:, p] <= value
            if go.all() or not go.any():
                continue
            t = Tree({0: SplitRule(p, c, float(value))}, {1: 0.0, 2: 0.0})
            ev = fixed_tree_posterior(
                X, y, t, probit=probit, prior_sd=prior_sd, monotone=monotone, offset=offset, sigma=sigma,
                resolution=resolution, check=False,
            ).log_evidence
            log_post[(p, c)] = math.log(ps) - math.log(len(avail)) - math.log(len(grid[p])) + ev
            options.append((p, c))
    top = max(log_post.values())
    z = sum(math.exp(v - top) for v in log_post.values())
    return {key: math.exp(v - top) / z for key, v in log_post.items()}
