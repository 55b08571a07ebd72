"""Binary regression trees and the monotone domination relation between leaves.

Nodes are addressed by heap index: the root is 0 and node ``k`` has children
``2k + 1`` (left) and ``2k + 2`` (right), so depth is implicit in the id. A
split on variable ``v`` at cut value ``c`` sends ``x[v] <= c`` left, which
makes every leaf cell a product of half-open intervals ``(lo, hi]``.

Trees are immutable values: every edit returns a new tree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping

import numpy as np


class TreeError(ValueError):
    pass


def node_depth(node: int) -> int:
    return (node + 1).bit_length() - 1


def parent_of(node: int) -> int:
    return (node - 1) // 2


def sibling_of(node: int) -> int:
    return node + 1 if node % 2 else node - 1


@dataclass(frozen=True)
class SplitRule:
    var: int
    cut_index: int
    cut_value: float


@dataclass(frozen=True)
class Cell:
    """Axis-aligned box ``prod_p (lo[p], hi[p]]`` owned by ``leaf``."""

    leaf: int
    lo: np.ndarray
    hi: np.ndarray

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all((self.lo < x) & (x <= self.hi)))


@dataclass(frozen=True)
class ConstraintBounds:
    lower: float = -math.inf
    upper: float = math.inf


@dataclass(frozen=True, eq=False)
class Tree:
    """A regression tree: split rules at internal nodes, values at leaves."""

    splits: Mapping[int, SplitRule] = field(default_factory=dict)
    values: Mapping[int, float] = field(default_factory=lambda: {0: 0.0})

    @classmethod
    def root(cls, mu: float = 0.0) -> Tree:
        return cls({}, {0: float(mu)})

    def __eq__(self, other):
        if not isinstance(other, Tree):
            return NotImplemented
        return dict(self.splits) == dict(other.splits) and dict(self.values) == dict(other.values)

    def same_structure(self, other: Tree) -> bool:
        return dict(self.splits) == dict(other.splits) and set(self.values) == set(other.values)

    @cached_property
    def leaves(self) -> tuple[int, ...]:
        return tuple(sorted(self.values))

    @cached_property
    def nog_nodes(self) -> tuple[int, ...]:
        """Internal nodes whose children are both leaves."""
        return tuple(
            k for k in sorted(self.splits) if 2 * k + 1 in self.values and 2 * k + 2 in self.values
        )

    @property
    def n_leaves(self) -> int:
        return len(self.values)

    def is_leaf(self, node: int) -> bool:
        return node in self.values

    @cached_property
    def depth(self) -> int:
        return max(node_depth(k) for k in self.values)

    def with_values(self, values: Mapping[int, float]) -> Tree:
        if set(values) != set(self.values):
            raise TreeError("new leaf values must cover exactly the current leaves")
        return Tree(self.splits, {k: float(v) for k, v in values.items()})

    def value_vector(self) -> np.ndarray:
        return np.array([self.values[k] for k in self.leaves])

    def path_bounds(self, node: int, n_vars: int) -> tuple[np.ndarray, np.ndarray]:
        """Cell of ``node`` as arrays of lower and upper interval ends."""
        lo = np.full(n_vars, -math.inf)
        hi = np.full(n_vars, math.inf)
        k = node
        while k > 0:
            par = parent_of(k)
            rule = self.splits[par]
            if k == 2 * par + 1:
                hi[rule.var] = min(hi[rule.var], rule.cut_value)
            else:
                lo[rule.var] = max(lo[rule.var], rule.cut_value)
            k = par
        return lo, hi

    def cut_index_range(self, node: int, var: int, n_cuts: int) -> tuple[int, int]:
        """Half-open range of grid cut indices lying strictly inside the node's cell."""
        start, stop = 0, n_cuts
        k = node
        while k > 0:
            par = parent_of(k)
            rule = self.splits[par]
            if rule.var == var:
                if k == 2 * par + 1:
                    stop = min(stop, rule.cut_index)
                else:
                    start = max(start, rule.cut_index + 1)
            k = par
        return start, max(start, stop)

    @cached_property
    def _compiled(self):
        ids = sorted(set(self.splits) | set(self.values))
        pos = {k: i for i, k in enumerate(ids)}
        size = len(ids)
        var = np.zeros(size, dtype=np.intp)
        cut = np.zeros(size)
        left = np.arange(size)
        right = np.arange(size)
        value = np.zeros(size)
        for k, i in pos.items():
            rule = self.splits.get(k)
            if rule is None:
                value[i] = self.values[k]
            else:
                var[i], cut[i] = rule.var, rule.cut_value
                left[i], right[i] = pos[2 * k + 1], pos[2 * k + 2]
        return var, cut, left, right, value

    def predict(self, X) -> np.ndarray:
        """Vectorized evaluation over the rows of ``X``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        var, cut, left, right, value = self._compiled
        idx = np.zeros(X.shape[0], dtype=np.intp)
        rows = np.arange(X.shape[0])
        for _ in range(self.depth):
            go_left = X[rows, var[idx]] <= cut[idx]
            idx = np.where(go_left, left[idx], right[idx])
        return value[idx]

    def leaf_of(self, X) -> np.ndarray:
        """Heap id of the leaf containing each row of ``X``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        node = np.zeros(X.shape[0], dtype=np.int64)
        for k in sorted(self.splits):
            rule = self.splits[k]
            here = node == k
            node[here] = np.where(X[here, rule.var] <= rule.cut_value, 2 * k + 1, 2 * k + 2)
        return node


def evaluate(t: Tree, x) -> float:
    """Value of the leaf whose cell contains the point ``x``."""
    x = np.asarray(x, dtype=float).ravel()
    k = 0
    while k in t.splits:
        rule = t.splits[k]
        k = 2 * k + 1 if x[rule.var] <= rule.cut_value else 2 * k + 2
    return t.values[k]


def birth(t: Tree, leaf: int, rule: SplitRule, left_mu: float, right_mu: float) -> Tree:
    """Split ``leaf`` with ``rule`` into two leaves."""
    if leaf not in t.values:
        raise TreeError(f"node {leaf} is not a leaf")
    n_vars = max([r.var for r in t.splits.values()] + [rule.var]) + 1
    lo, hi = t.path_bounds(leaf, n_vars)
    if not lo[rule.var] < rule.cut_value < hi[rule.var]:
        raise TreeError(
            f"cut value {rule.cut_value} for variable {rule.var} does not split the "
            f"interval ({lo[rule.var]}, {hi[rule.var]}] of leaf {leaf}"
        )
    splits = dict(t.splits)
    splits[leaf] = rule
    values = {k: v for k, v in t.values.items() if k != leaf}
    values[2 * leaf + 1] = float(left_mu)
    values[2 * leaf + 2] = float(right_mu)
    return Tree(splits, values)


def death(t: Tree, node: int, mu: float = 0.0) -> Tree:
    """Collapse the nog node ``node`` back into a leaf with value ``mu``."""
    if node not in t.splits or 2 * node + 1 not in t.values or 2 * node + 2 not in t.values:
        raise TreeError(f"node {node} is not an internal node with two leaf children")
    splits = {k: r for k, r in t.splits.items() if k != node}
    values = {k: v for k, v in t.values.items() if k not in (2 * node + 1, 2 * node + 2)}
    values[node] = float(mu)
    return Tree(splits, values)


def leaf_cells(t: Tree, n_vars: int) -> list[Cell]:
    return [Cell(k, *t.path_bounds(k, n_vars)) for k in t.leaves]


def dominance_matrix(cells: list[Cell], S: Iterable[int]) -> np.ndarray:
    """Boolean matrix ``D`` with ``D[a, b]`` true when leaf ``a`` must not exceed leaf ``b``."""
    S = sorted(set(S))
    b = len(cells)
    D = np.zeros((b, b), dtype=bool)
    if not S or b < 2:
        return D
    lo = np.array([c.lo for c in cells])
    hi = np.array([c.hi for c in cells])
    overlap = np.maximum(lo[:, None, :], lo[None, :, :]) < np.minimum(hi[:, None, :], hi[None, :, :])
    n_vars = lo.shape[1]
    for i in S:
        others = [j for j in range(n_vars) if j != i]
        side = overlap[:, :, others].all(axis=2) if others else np.ones((b, b), dtype=bool)
        D |= side & (hi[:, None, i] <= lo[None, :, i])
    return D


def above_pairs(cells: list[Cell], S: Iterable[int]) -> list[tuple[int, int, int]]:
    """All (lower leaf, upper leaf, coordinate) triples constrained by monotonicity in ``S``."""
    pairs = []
    for i in sorted(set(S)):
        D = dominance_matrix(cells, [i])
        for a, b in zip(*np.nonzero(D)):
            pairs.append((cells[a].leaf, cells[b].leaf, i))
    pairs.sort()
    return pairs


def constraint_bounds(
    t: Tree, leaf: int, pairs: Iterable[tuple[int, int, int]], values: Mapping[int, float]
) -> ConstraintBounds:
    """Interval the value of ``leaf`` must stay in given the other leaves' values.

    Leaves missing from ``values`` (or set to NaN) impose no bound.
    """
    lower, upper = -math.inf, math.inf
    for a, b, _ in pairs:
        if b == leaf and a != leaf:
            v = values.get(a, math.nan)
            if v > lower:
                lower = v
        elif a == leaf and b != leaf:
            v = values.get(b, math.nan)
            if v < upper:
                upper = v
    return ConstraintBounds(lower, upper)


def is_monotone(t: Tree, S: Iterable[int], n_vars: int | None = None) -> bool:
    S = sorted(set(S))
    if not S or not t.splits:
        return True
    if n_vars is None:
        n_vars = max([r.var for r in t.splits.values()] + S) + 1
    cells = leaf_cells(t, n_vars)
    D = dominance_matrix(cells, S)
    v = np.array([t.values[c.leaf] for c in cells])
    a, b = np.nonzero(D)
    return bool(np.all(v[a] <= v[b]))


def count_linear_extensions(D: np.ndarray) -> int:
    """Number of total orders of ``range(len(D))`` compatible with ``D[a, b] => a before b``.

    Connected components are counted separately and merged with a
    multinomial coefficient; within a component a memoized recursion runs
    over the down-sets of the order. Returns 0 if ``D`` has a cycle.
    """
    D = np.asarray(D, dtype=bool)
    b = D.shape[0]
    if b == 0:
        return 1
    parent = list(range(b))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for a, c in zip(*np.nonzero(D | D.T)):
        ra, rc = find(int(a)), find(int(c))
        if ra != rc:
            parent[ra] = rc
    groups: dict[int, list[int]] = {}
    for i in range(b):
        groups.setdefault(find(i), []).append(i)

    total, placed = 1, 0
    for members in groups.values():
        size = len(members)
        placed += size
        total *= math.comb(placed, size)
        if size > 1:
            total *= _component_extensions(D[np.ix_(members, members)])
            if total == 0:
                return 0
    return total


def _component_extensions(D: np.ndarray) -> int:
    size = D.shape[0]
    preds = [sum(1 << int(a) for a in np.nonzero(D[:, k])[0]) for k in range(size)]
    full = (1 << size) - 1
    memo = {full: 1}

    def count(done):
        if done in memo:
            return memo[done]
        total = 0
        for k in range(size):
            bit = 1 << k
            if not done & bit and preds[k] & done == preds[k]:
                total += count(done | bit)
        memo[done] = total
        return total

    return count(0)


def dump_forest(forest: Iterable[Tree]) -> str:
    """Line-oriented text form of a forest.

    One ``tree <j>`` header per tree, then one line per node::

        <node> <parent> split <var> <cut_index> <cut_value>
        <node> <parent> leaf <value>

    Floats are written with ``repr`` so that loading is exact.
    """
    lines = []
    for j, t in enumerate(forest):
        lines.append(f"tree {j}")
        for k in sorted(set(t.splits) | set(t.values)):
            par = parent_of(k) if k else -1
            rule = t.splits.get(k)
            if rule is None:
                lines.append(f"{k} {par} leaf {t.values[k]!r}")
            else:
                lines.append(f"{k} {par} split {rule.var} {rule.cut_index} {rule.cut_value!r}")
    return "\n".join(lines) + "\n"


def load_forest(text: str) -> list[Tree]:
    forest: list[Tree] = []
    splits: dict[int, SplitRule] | None = None
    values: dict[int, float] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        parts = line.split()
        if not parts or parts[0].startswith("#"):
            continue
        if parts[0] == "tree":
            if splits is not None:
                forest.append(Tree(splits, values))
            splits, values = {}, {}
            continue
        if splits is None:
            raise TreeError(f"line {lineno}: node line before any 'tree' header")
        node, kind = int(parts[0]), parts[2]
        if kind == "split":
            splits[node] = SplitRule(int(parts[3]), int(parts[4]), float(parts[5]))
        elif kind == "leaf":
            values[node] = float(parts[3])
        else:
            raise TreeError(f"line {lineno}: unknown node kind {kind!r}")
    if splits is not None:
        forest.append(Tree(splits, values))
    return forest
