"""Simple undirected graphs, instance generators and file I/O.

Vertices are labelled ``1..n`` everywhere in the public API (the DIMACS
convention).  Edges are stored as sorted pairs ``(i, j)`` with ``i < j``.
"""
from __future__ import annotations

import itertools
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

logger = logging.getLogger(__name__)


class GraphFormatError(ValueError):
    """Raised for malformed graph files or invalid graph data."""


@dataclass(frozen=True)
class Graph:
    n: int
    edges: frozenset[tuple[int, int]] = field(default_factory=frozenset)
    name: str = "G"

    def __post_init__(self):
        if self.n < 0:
            raise GraphFormatError(f"negative vertex count {self.n}")
        canon = set()
        for e in self.edges:
            i, j = (int(v) for v in e)
            if i == j:
                raise GraphFormatError(f"self-loop at vertex {i}")
            if not (1 <= i <= self.n and 1 <= j <= self.n):
                raise GraphFormatError(f"edge {(i, j)} outside 1..{self.n}")
            canon.add((min(i, j), max(i, j)))
        object.__setattr__(self, "edges", frozenset(canon))

    @property
    def m(self) -> int:
        return len(self.edges)

    @property
    def vertices(self) -> range:
        return range(1, self.n + 1)

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def has_edge(self, i: int, j: int) -> bool:
        return (min(i, j), max(i, j)) in self.edges

    def adjacency(self) -> np.ndarray:
        """Dense 0/1 adjacency matrix (0-based indices)."""
        a = np.zeros((self.n, self.n), dtype=np.int8)
        for i, j in self.edges:
            a[i - 1, j - 1] = a[j - 1, i - 1] = 1
        return a

    def neighbor_masks(self) -> list[int]:
        """Adjacency as Python-int bitsets, bit ``v-1`` for vertex ``v``."""
        masks = [0] * self.n
        for i, j in self.edges:
            masks[i - 1] |= 1 << (j - 1)
            masks[j - 1] |= 1 << (i - 1)
        return masks

    def degrees(self) -> list[int]:
        deg = [0] * self.n
        for i, j in self.edges:
            deg[i - 1] += 1
            deg[j - 1] += 1
        return deg

    def __repr__(self) -> str:
        return f"Graph(name={self.name!r}, n={self.n}, m={self.m})"


def subset(members: Iterable[int], n: int | None = None) -> tuple[int, ...]:
    """Canonical vertex subset: strictly increasing 1-based labels."""
    out = tuple(sorted(int(v) for v in members))
    if len(set(out)) != len(out):
        raise ValueError(f"repeated vertex in subset {out}")
    if out and out[0] < 1:
        raise ValueError(f"vertex label {out[0]} < 1")
    if n is not None and out and out[-1] > n:
        raise ValueError(f"vertex label {out[-1]} > n={n}")
    return out


def complement(g: Graph) -> Graph:
    edges = {
        (i, j)
        for i, j in itertools.combinations(range(1, g.n + 1), 2)
        if (i, j) not in g.edges
    }
    return Graph(g.n, frozenset(edges), name=f"co-{g.name}")


def induced_subgraph(g: Graph, members: Sequence[int]) -> Graph:
    """Subgraph induced by ``members``, relabelled ``1..k`` in sorted order."""
    idx = subset(members, g.n)
    pos = {v: a + 1 for a, v in enumerate(idx)}
    edges = {
        (pos[i], pos[j])
        for i, j in itertools.combinations(idx, 2)
        if (i, j) in g.edges
    }
    return Graph(len(idx), frozenset(edges), name=f"{g.name}[{','.join(map(str, idx))}]")


def empty_graph(n: int) -> Graph:
    return Graph(n, frozenset(), name=f"E{n}")


def complete_graph(n: int) -> Graph:
    return Graph(n, frozenset(itertools.combinations(range(1, n + 1), 2)), name=f"K{n}")


def cycle_graph(n: int) -> Graph:
    if n < 3:
        raise ValueError("a cycle needs at least 3 vertices")
    edges = {(i, i + 1) for i in range(1, n)} | {(1, n)}
    return Graph(n, frozenset(edges), name=f"C{n}")


def path_graph(n: int) -> Graph:
    return Graph(n, frozenset((i, i + 1) for i in range(1, n)), name=f"P{n}")


# --- deterministic random graphs -------------------------------------------

_MASK64 = (1 << 64) - 1


def splitmix64(seed: int):
    """SplitMix64 stream (Steele, Lea & Flood 2014), yields 64-bit ints.

    Chosen because it is tiny and bit-exact in any language, so an
    ``(n, p, seed)`` triple names the same graph everywhere.
    """
    state = seed & _MASK64
    while True:
        state = (state + 0x9E3779B97F4A7C15) & _MASK64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        yield z ^ (z >> 31)


def erdos_renyi(n: int, p: float, seed: int) -> Graph:
    """G(n, p) with one SplitMix64 draw per pair, pairs in lexicographic order.

    A pair is an edge iff ``(draw >> 11) * 2**-53 < p``.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p={p} outside [0, 1]")
    rng = splitmix64(seed)
    edges = set()
    for i, j in itertools.combinations(range(1, n + 1), 2):
        u = (next(rng) >> 11) * 2.0**-53
        if u < p:
            edges.add((i, j))
    return Graph(n, frozenset(edges), name=f"G_{n}_{p:g}_s{seed}")


# --- structured instances ---------------------------------------------------

def _is_prime(q: int) -> bool:
    if q < 2:
        return False
    return all(q % d for d in range(2, math.isqrt(q) + 1))


def paley(q: int) -> Graph:
    """Paley graph on residues mod a prime ``q = 1 (mod 4)``; vertex v is residue v-1."""
    if not _is_prime(q) or q % 4 != 1:
        raise ValueError(f"Paley graph needs a prime q = 1 mod 4, got {q}")
    squares = {(a * a) % q for a in range(1, q)}
    edges = {
        (u + 1, v + 1)
        for u, v in itertools.combinations(range(q), 2)
        if (v - u) % q in squares
    }
    return Graph(q, frozenset(edges), name=f"Paley{q}")


def hamming_graph(bits: int, distances: Iterable[int], name: str | None = None) -> Graph:
    """Vertices are the binary words of length ``bits`` (vertex v is word v-1)."""
    dist = set(distances)
    n = 1 << bits
    edges = {
        (u + 1, v + 1)
        for u, v in itertools.combinations(range(n), 2)
        if bin(u ^ v).count("1") in dist
    }
    return Graph(n, frozenset(edges), name=name or f"H{bits}_{sorted(dist)}")


def hamming_complement_6_4() -> Graph:
    """Complement of the DIMACS clique instance hamming6-4 (n=64, m=1312)."""
    return hamming_graph(6, {1, 2, 3}, name="hamming6_4")


def hamming6_4_dimacs() -> Graph:
    """The DIMACS clique instance itself: distance at least 4 (m=704)."""
    return hamming_graph(6, {4, 5, 6}, name="hamming6-4")


def circulant(n: int, connections: Iterable[int]) -> Graph:
    conn = sorted(set(int(c) for c in connections))
    for c in conn:
        if not 1 <= c <= n // 2:
            raise ValueError(f"offset {c} outside 1..{n // 2}")
    cs = set(conn)
    edges = set()
    for u, v in itertools.combinations(range(1, n + 1), 2):
        d = v - u
        if min(d, n - d) in cs:
            edges.add((u, v))
    return Graph(n, frozenset(edges), name=f"Circulant{n}_{'-'.join(map(str, conn))}")


# --- DIMACS -----------------------------------------------------------------

def parse_dimacs(text: str | bytes, name: str = "dimacs") -> Graph:
    """Parse the DIMACS edge format (``p edge n m`` / ``e i j``)."""
    if isinstance(text, bytes):
        text = text.decode("ascii", errors="replace")
    n = None
    declared_m = None
    edges: set[tuple[int, int]] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] == "c":
            continue
        parts = line.split()
        if parts[0] == "p":
            if n is not None:
                raise GraphFormatError(f"line {lineno}: second problem line")
            if len(parts) != 4 or parts[1] not in ("edge", "col"):
                raise GraphFormatError(f"line {lineno}: malformed problem line {line!r}")
            try:
                n, declared_m = int(parts[2]), int(parts[3])
            except ValueError:
                raise GraphFormatError(f"line {lineno}: malformed problem line {line!r}") from None
            if n < 0 or declared_m < 0:
                raise GraphFormatError(f"line {lineno}: negative size")
        elif parts[0] == "e":
            if n is None:
                raise GraphFormatError(f"line {lineno}: edge before problem line")
            if len(parts) < 3:
                raise GraphFormatError(f"line {lineno}: malformed edge line {line!r}")
            try:
                i, j = int(parts[1]), int(parts[2])
            except ValueError:
                raise GraphFormatError(f"line {lineno}: malformed edge line {line!r}") from None
            if i == j:
                raise GraphFormatError(f"line {lineno}: self-loop at vertex {i}")
            if not (1 <= i <= n and 1 <= j <= n):
                raise GraphFormatError(f"line {lineno}: endpoint outside 1..{n}")
            edges.add((min(i, j), max(i, j)))
        else:
            # other DIMACS descriptors (n, x, ...) are irrelevant here
            continue
    if n is None:
        raise GraphFormatError("missing problem line")
    if declared_m != len(edges):
        logger.warning("DIMACS header declares m=%d but %d distinct edges were read",
                       declared_m, len(edges))
    return Graph(n, frozenset(edges), name=name)


def read_dimacs(path: str | Path) -> Graph:
    path = Path(path)
    return parse_dimacs(path.read_bytes(), name=path.stem)


def to_dimacs(g: Graph) -> str:
    lines = [f"c {g.name}", f"p edge {g.n} {g.m}"]
    lines += [f"e {i} {j}" for i, j in g.sorted_edges()]
    return "\n".join(lines) + "\n"


# --- JSON -------------------------------------------------------------------

def to_json(g: Graph) -> str:
    return json.dumps({"name": g.name, "n": g.n, "edges": [list(e) for e in g.sorted_edges()]})


def from_json(text: str) -> Graph:
    try:
        data = json.loads(text)
        return Graph(int(data["n"]), frozenset(tuple(e) for e in data["edges"]),
                     name=str(data.get("name", "G")))
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise GraphFormatError(f"bad JSON graph: {exc}") from exc
