"""Deterministic instance suites shared by the property and acceptance tests.

Small G(n, p) graphs are usually perfect, where every bound collapses to
alpha and the constraints never bind.  The suites therefore keep sampling
seeds until most accepted graphs have a theta/alpha gap.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from esh import graphs
from esh.hierarchy import theta
from esh.stable_sets import alpha_bruteforce


def _gap(g) -> float:
    return theta(g).bound - alpha_bruteforce(g)


@lru_cache(maxsize=None)
def random_graphs(count: int = 20, n_lo: int = 5, n_hi: int = 10, imperfect: int = 14,
                  seed: int = 2024) -> tuple:
    """``count`` graphs, ``imperfect`` of them with theta > alpha + 1e-3."""
    out, plain = [], []
    s = seed
    while len(out) < imperfect:
        n = n_lo + s % (n_hi - n_lo + 1)
        p = (0.35, 0.5, 0.65)[s % 3]
        g = graphs.erdos_renyi(n, p, s)
        s += 1
        if _gap(g) > 1e-3:
            out.append(g)
        elif len(plain) < count - imperfect:
            plain.append(g)
    return tuple(out + plain)


@lru_cache(maxsize=None)
def graph_subset_pairs(count: int = 50, n_lo: int = 8, n_hi: int = 14, max_order: int = 4,
                       seed: int = 7) -> tuple:
    """``(graph, J)`` pairs with ``J`` a handful of random subsets of order 2..max_order."""
    rng = np.random.default_rng(seed)
    gs = random_graphs(count, n_lo, n_hi, imperfect=count * 4 // 5, seed=seed * 1000)
    pairs = []
    for g in gs:
        size = int(rng.integers(3, 13))
        subs = set()
        while len(subs) < size:
            k = int(rng.integers(2, max_order + 1))
            subs.add(tuple(sorted(int(v) + 1 for v in rng.choice(g.n, size=k, replace=False))))
        pairs.append((g, sorted(subs)))
    return tuple(pairs)
