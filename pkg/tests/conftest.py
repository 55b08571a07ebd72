import numpy as np
import pytest

from pmbart.tree import SplitRule, Tree, birth


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_tree(rng, n_vars=2, n_splits=4, cut_count=9, lo=-1.0, hi=1.0):
    """Random tree on a uniform grid of ``cut_count`` cutpoints per variable."""
    cuts = np.linspace(lo, hi, cut_count + 2)[1:-1]
    t = Tree.root(float(rng.normal()))
    for _ in range(n_splits):
        options = []
        for leaf in t.leaves:
            for v in range(n_vars):
                start, stop = t.cut_index_range(leaf, v, cut_count)
                if stop > start:
                    options.append((leaf, v, start, stop))
        if not options:
            break
        leaf, v, start, stop = options[rng.integers(len(options))]
        c = int(rng.integers(start, stop))
        t = birth(t, leaf, SplitRule(v, c, float(cuts[c])), float(rng.normal()), float(rng.normal()))
    return t
