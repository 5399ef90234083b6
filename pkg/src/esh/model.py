"""Block-structured SDPs for the two theta formulations and their ESC augmentations.

Problems are stored in equality form::

    maximize   sum_b <C_b, X_b>
    subject to sum_b <A_ib, X_b> = b_i     for every constraint i
               X_b psd (PSD blocks) or X_b >= 0 (NonNeg blocks)

Coefficients are kept as upper-triangle triples ``(row, col, val)`` with the
SDPA convention: an off-diagonal triple stands for both ``(row, col)`` and
``(col, row)``, so it contributes ``2 * val * X[row, col]``.  Indices are
0-based internally.  NonNeg blocks are diagonal: entry ``(i, i, v)``
multiplies the ``i``-th variable.
"""
from __future__ import annotations

import copy
import itertools
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .graphs import Graph, induced_subgraph, subset
from .polytopes import facets_stab2_empty
from .stable_sets import enumerate_stable_sets, scaled_stable_set_matrices, stable_set_matrices

PSD = "psd"
NONNEG = "nonneg"

THETA_NPLUS1 = "Tn+1"
THETA_N = "Tn"


class ModelError(ValueError):
    pass


@dataclass
class EscRecord:
    subset: tuple[int, ...]
    mode: str
    scaled: bool
    var_start: int  # first NonNeg index used (lambda or slack)
    var_stop: int
    con_start: int
    con_stop: int
    stable_masks: tuple[int, ...] = ()
    facet_ids: tuple[int, ...] = ()  # facet mode: which facets of the edgeless system were added


@dataclass
class SdpProblem:
    blocks: list[tuple[str, int]]
    # constraint-wise coefficient triples: (con, block, row, col, val)
    entries: list[tuple[int, int, int, int, float]] = field(default_factory=list)
    rhs: list[float] = field(default_factory=list)
    objective: list[tuple[int, int, int, float]] = field(default_factory=list)
    formulation: str = ""
    n: int = 0
    escs: list[EscRecord] = field(default_factory=list)
    labels: list[str] = field(default_factory=list)

    @property
    def num_constraints(self) -> int:
        return len(self.rhs)

    def copy(self) -> "SdpProblem":
        return copy.deepcopy(self)

    def add_block(self, kind: str, dim: int) -> int:
        if kind not in (PSD, NONNEG):
            raise ModelError(f"unknown block kind {kind}")
        self.blocks.append((kind, dim))
        return len(self.blocks) - 1

    def grow_nonneg(self, count: int) -> tuple[int, int]:
        """Append ``count`` variables to the (single, last) NonNeg block."""
        if not self.blocks or self.blocks[-1][0] != NONNEG:
            self.add_block(NONNEG, 0)
        kind, dim = self.blocks[-1]
        self.blocks[-1] = (kind, dim + count)
        return len(self.blocks) - 1, dim

    def add_constraint(self, terms: Iterable[tuple[int, int, int, float]], rhs: float,
                       label: str = "") -> int:
        con = len(self.rhs)
        for blk, r, c, v in terms:
            if v == 0:
                continue
            kind, dim = self.blocks[blk]
            if r > c:
                r, c = c, r
            if not (0 <= r and c < dim) or (kind == NONNEG and r != c):
                raise ModelError(f"entry {(r, c)} invalid for block {blk} {kind}({dim})")
            self.entries.append((con, blk, r, c, float(v)))
        self.rhs.append(float(rhs))
        self.labels.append(label)
        return con

    def validate(self) -> None:
        for con, blk, r, c, _ in self.entries:
            kind, dim = self.blocks[blk]
            if not (0 <= con < len(self.rhs)) or not (0 <= r <= c < dim):
                raise ModelError(f"bad entry {(con, blk, r, c)}")
            if kind == NONNEG and r != c:
                raise ModelError("off-diagonal entry in NonNeg block")

    def constraint_entries(self, con: int) -> list[tuple[int, int, int, float]]:
        return [(b, r, c, v) for k, b, r, c, v in self.entries if k == con]


# --- base formulations ----------------------------------------------------------

def build_theta_nplus1(g: Graph) -> SdpProblem:
    """Theta with the order-(n+1) matrix ``[[1, x^T], [x, X]]``; row/col 0 is the corner."""
    p = SdpProblem(blocks=[], formulation=THETA_NPLUS1, n=g.n)
    p.add_block(PSD, g.n + 1)
    p.add_constraint([(0, 0, 0, 1.0)], 1.0, "corner")
    for i in range(1, g.n + 1):
        p.add_constraint([(0, i, i, 1.0), (0, 0, i, -0.5)], 0.0, f"diag{i}")
    for i, j in g.sorted_edges():
        p.add_constraint([(0, i, j, 0.5)], 0.0, f"edge{i},{j}")
    p.objective = [(0, 0, i, 0.5) for i in range(1, g.n + 1)]
    return p


def build_theta_n(g: Graph) -> SdpProblem:
    """Theta with the order-n matrix, ``trace(X) = 1`` and objective ``<J, X>``."""
    p = SdpProblem(blocks=[], formulation=THETA_N, n=g.n)
    p.add_block(PSD, g.n)
    p.add_constraint([(0, i, i, 1.0) for i in range(g.n)], 1.0, "trace")
    for i, j in g.sorted_edges():
        p.add_constraint([(0, i - 1, j - 1, 0.5)], 0.0, f"edge{i},{j}")
    p.objective = [(0, i, j, 1.0) for i in range(g.n) for j in range(i, g.n)]
    return p


def matrix_offset(p: SdpProblem) -> int:
    """Row/column of vertex 1 inside the PSD block."""
    return 1 if p.formulation == THETA_NPLUS1 else 0


# --- exact subgraph constraints -------------------------------------------------

@dataclass
class EscSelection:
    subsets: list[tuple[int, ...]]
    mode: str = "lambda"
    scaled: bool = False

    def __post_init__(self):
        if self.mode not in ("lambda", "facets"):
            raise ModelError(f"unknown ESC mode {self.mode!r}")
        if self.scaled and self.mode != "lambda":
            raise ModelError("scaled ESCs are only available in lambda mode")
        seen, out = set(), []
        for s in self.subsets:
            s = subset(s)
            if s not in seen:
                seen.add(s)
                out.append(s)
        self.subsets = out
        if self.mode == "facets" and any(len(s) > 5 for s in self.subsets):
            raise ModelError("facet mode supports subsets of order <= 5")

    def summary(self) -> dict[int, int]:
        counts: dict[int, int] = {}
        for s in self.subsets:
            counts[len(s)] = counts.get(len(s), 0) + 1
        return dict(sorted(counts.items()))


def all_subsets(n: int, k: int) -> list[tuple[int, ...]]:
    return [tuple(c) for c in itertools.combinations(range(1, n + 1), k)]


def add_escs(p: SdpProblem, g: Graph, sel: EscSelection) -> SdpProblem:
    """Return a copy of ``p`` with one ESC (or SESC) per subset of ``sel``."""
    q = p.copy()
    off = matrix_offset(q)
    for s in sel.subsets:
        if s and s[-1] > g.n:
            raise ModelError(f"subset {s} outside 1..{g.n}")
        if sel.mode == "lambda":
            _add_lambda_esc(q, g, s, sel.scaled, off)
        else:
            _add_facet_esc(q, g, s, off)
    return q


def _add_lambda_esc(p: SdpProblem, g: Graph, s: tuple[int, ...], scaled: bool, off: int) -> None:
    fam = enumerate_stable_sets(induced_subgraph(g, s))
    mats = scaled_stable_set_matrices(fam) if scaled else stable_set_matrices(fam)
    blk, start = p.grow_nonneg(fam.t)
    con_start = p.num_constraints
    p.add_constraint([(blk, start + i, start + i, 1.0) for i in range(fam.t)], 1.0,
                     f"simplex{s}")
    k = len(s)
    for a in range(k):
        for b in range(a, k):
            r, c = s[a] - 1 + off, s[b] - 1 + off
            coef = 1.0 if a == b else 0.5
            terms = [(0, r, c, coef)]
            terms += [(blk, start + i, start + i, -mats[i, a, b]) for i in range(fam.t)]
            p.add_constraint(terms, 0.0, f"couple{s}[{a},{b}]")
    p.escs.append(EscRecord(s, "lambda", scaled, start, start + fam.t, con_start,
                            p.num_constraints, fam.masks))


def _add_facet_esc(p: SdpProblem, g: Graph, s: tuple[int, ...], off: int) -> None:
    k = len(s)
    con_start = p.num_constraints
    if k < 2:
        # STAB^2 of a single vertex is 0 <= X_ii <= 1, implied by the base model
        blk, start = p.grow_nonneg(0)
        p.escs.append(EscRecord(s, "facets", False, start, start, con_start, con_start))
        return
    edge_pos = {(a, b) for a in range(k) for b in range(a + 1, k) if g.has_edge(s[a], s[b])}
    kept = []
    for f_idx, ineq in enumerate(facets_stab2_empty(k).inequalities):
        support = {(a, b) for a in range(k) for b in range(a, k) if ineq.coeff[a, b]}
        # an inequality living on edge entries only reads 0 <= rhs: its slack
        # would be a constant and the model would lose strict feasibility
        if support <= edge_pos and ineq.rhs >= 0:
            continue
        kept.append((f_idx, ineq))
    blk, start = p.grow_nonneg(len(kept))
    for pos, (f_idx, ineq) in enumerate(kept):
        terms = []
        for a in range(k):
            for b in range(a, k):
                v = ineq.coeff[a, b]
                if v:
                    terms.append((0, s[a] - 1 + off, s[b] - 1 + off, v))
        terms.append((blk, start + pos, start + pos, 1.0))
        p.add_constraint(terms, ineq.rhs, f"facet{s}#{f_idx}")
    p.escs.append(EscRecord(s, "facets", False, start, start + len(kept), con_start,
                            p.num_constraints, facet_ids=tuple(f for f, _ in kept)))


# --- solution transforms between the two formulations ------------------------------

class TransformError(ValueError):
    pass


def split_nplus1(y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``(x, X)`` from the order-(n+1) block ``[[1, x^T], [x, X]]``."""
    return y[0, 1:].copy(), y[1:, 1:].copy()


def rescale_to_unit_trace(x: np.ndarray, X: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Map a (Tn+1) point to the (Tn) point ``X / trace(X)``."""
    tr = float(np.trace(X))
    if tr <= tol:
        raise TransformError(f"trace {tr} too small to rescale")
    return np.asarray(X, dtype=float) / tr


def lift_from_unit_trace(X: np.ndarray, g: Graph | None = None, tol: float = 1e-5
                    ) -> tuple[np.ndarray, np.ndarray]:
    """Map a (Tn) point to ``(diag(X*), X*)`` with ``X* = <J, X> X``."""
    X = np.asarray(X, dtype=float)
    resid = abs(np.trace(X) - 1.0)
    if g is not None:
        resid = max([resid] + [abs(X[i - 1, j - 1]) for i, j in g.edges])
    if resid > tol:
        raise TransformError(f"input is not feasible for the trace formulation (residual {resid:.2e})")
    big = X.sum() * X
    return np.diag(big).copy(), big


# --- SDPA sparse format -------------------------------------------------------------

def to_sdpa(p: SdpProblem) -> str:
    """Sparse SDPA text: our problem is the SDPA dual ``max F0.Y s.t. Fi.Y = ci``."""
    lines = [f'"{p.formulation} n={p.n}"', str(p.num_constraints), str(len(p.blocks))]
    lines.append(" ".join(str(d if kind == PSD else -d) for kind, d in p.blocks))
    lines.append(" ".join(repr(float(b)) for b in p.rhs))
    for blk, r, c, v in p.objective:
        lines.append(f"0 {blk + 1} {r + 1} {c + 1} {v!r}")
    for con, blk, r, c, v in sorted(p.entries):
        lines.append(f"{con + 1} {blk + 1} {r + 1} {c + 1} {v!r}")
    return "\n".join(lines) + "\n"


def write_sdpa(p: SdpProblem, path: str | Path) -> None:
    Path(path).write_text(to_sdpa(p))


def from_sdpa(text: str) -> SdpProblem:
    rows = [ln.strip() for ln in text.splitlines()]
    rows = [ln for ln in rows if ln and ln[0] not in '"*']
    tokens = lambda ln: ln.replace(",", " ").replace("{", " ").replace("}", " ").replace("(", " ").replace(")", " ").split()
    m = int(tokens(rows[0])[0])
    nblocks = int(tokens(rows[1])[0])
    sizes = [int(v) for v in tokens(rows[2])[:nblocks]]
    b = [float(v) for v in tokens(rows[3])[:m]]
    p = SdpProblem(blocks=[(PSD, s) if s > 0 else (NONNEG, -s) for s in sizes])
    p.rhs = b
    p.labels = [""] * m
    for ln in rows[4:]:
        mat, blk, r, c, v = tokens(ln)[:5]
        mat, blk, r, c = int(mat), int(blk) - 1, int(r) - 1, int(c) - 1
        if r > c:
            r, c = c, r
        if mat == 0:
            p.objective.append((blk, r, c, float(v)))
        else:
            p.entries.append((mat - 1, blk, r, c, float(v)))
    p.validate()
    return p


def read_sdpa(path: str | Path) -> SdpProblem:
    return from_sdpa(Path(path).read_text())
