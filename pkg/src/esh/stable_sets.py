"""Stable set enumeration, exact stability numbers and stable-set matrices."""
from __future__ import annotations

import json
import sys
import time
from dataclasses import dataclass

import numpy as np

from .graphs import Graph

DEFAULT_CAP = 1 << 22


class ResourceLimitError(RuntimeError):
    """An exponential computation would exceed its configured budget."""


@dataclass(frozen=True)
class StableSetFamily:
    """All stable sets of a graph on ``k`` vertices.

    ``masks[i]`` has bit ``v-1`` set for each member vertex ``v``.  Masks are
    strictly increasing, so the empty set always comes first and the order
    is reproducible.
    """

    k: int
    masks: tuple[int, ...]

    @property
    def t(self) -> int:
        return len(self.masks)

    @property
    def members(self) -> np.ndarray:
        """Incidence vectors as a ``(t, k)`` 0/1 array."""
        m = np.array(self.masks, dtype=np.int64)[:, None]
        return ((m >> np.arange(self.k)) & 1).astype(np.int8)

    def sizes(self) -> np.ndarray:
        return np.array([bin(s).count("1") for s in self.masks])

    def index_sets(self) -> list[list[int]]:
        return [[v + 1 for v in range(self.k) if s >> v & 1] for s in self.masks]

    def to_json(self) -> str:
        return json.dumps({"k": self.k, "stable_sets": self.index_sets()})


def enumerate_stable_sets(g: Graph, cap: int = DEFAULT_CAP) -> StableSetFamily:
    nbr = g.neighbor_masks()
    fam = [0]
    for v in range(g.n):
        bit = 1 << v
        # every set containing v sorts after every set on vertices < v
        fam.extend([s | bit for s in fam if not s & nbr[v]])
        if len(fam) > cap:
            raise ResourceLimitError(f"more than {cap} stable sets in {g.name}")
    return StableSetFamily(g.n, tuple(fam))


def stable_set_matrices(f: StableSetFamily) -> np.ndarray:
    """Array of shape ``(t, k, k)`` holding ``s s^T`` for each member."""
    s = f.members.astype(float)
    return s[:, :, None] * s[:, None, :]


def scaled_stable_set_matrices(f: StableSetFamily) -> np.ndarray:
    """``s s^T / s^T s`` for nonempty members; the empty set gives the zero matrix."""
    mats = stable_set_matrices(f)
    size = f.sizes().astype(float)
    size[size == 0] = 1.0
    return mats / size[:, None, None]


# --- stability number ------------------------------------------------------

def _lowbit(x: int) -> int:
    return (x & -x).bit_length() - 1


def alpha_bruteforce(g: Graph, time_limit: float = 600.0) -> int:
    """Exact stability number by branch and bound.

    Maximum clique search in the complement with bitset greedy colouring as
    the bound (a colour class of the complement is a clique of ``g``, so a
    stable set uses at most one vertex from each).
    """
    return maximum_stable_set(g, time_limit=time_limit)[0]


def maximum_stable_set(g: Graph, time_limit: float = 600.0) -> tuple[int, list[int]]:
    n = g.n
    if n == 0:
        return 0, []
    full = (1 << n) - 1
    gn = g.neighbor_masks()
    # neighbourhoods in the complement graph
    hn = [full & ~gn[v] & ~(1 << v) for v in range(n)]
    best = [0, 0]
    deadline = time.monotonic() + time_limit

    def colour_sort(p: int):
        order, colours = [], []
        uncoloured, c = p, 0
        while uncoloured:
            c += 1
            q = uncoloured
            while q:
                v = _lowbit(q)
                q &= ~(1 << v) & ~hn[v]
                uncoloured &= ~(1 << v)
                order.append(v)
                colours.append(c)
        return order, colours

    def expand(size: int, chosen: int, p: int):
        if time.monotonic() > deadline:
            raise ResourceLimitError(f"alpha search on {g.name} exceeded {time_limit}s")
        order, colours = colour_sort(p)
        for idx in range(len(order) - 1, -1, -1):
            if size + colours[idx] <= best[0]:
                return
            v = order[idx]
            newp = p & hn[v]
            if newp:
                expand(size + 1, chosen | (1 << v), newp)
            elif size + 1 > best[0]:
                best[0], best[1] = size + 1, chosen | (1 << v)
            p &= ~(1 << v)

    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, 10 * n + 100))
    try:
        expand(0, 0, full)
    finally:
        sys.setrecursionlimit(old)
    return best[0], [v + 1 for v in range(n) if best[1] >> v & 1]


def alpha_exhaustive(g: Graph) -> int:
    """Plain enumeration oracle, only sensible for ``n <= 30``."""
    if g.n > 30:
        raise ResourceLimitError("exhaustive alpha limited to n <= 30")
    return int(enumerate_stable_sets(g).sizes().max())
