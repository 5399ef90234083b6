"""Squared stable set polytopes: facet systems and projection oracles.

Matrices in ``Sym(k)`` are identified with their upper triangle
``(X_11, X_12, ..., X_1k, X_22, ..., X_kk)`` (row-major, diagonal included).
A :class:`LinearInequality` stores the symmetric coefficient matrix ``A`` of
``<A, X> <= b``; its *upper form* is the integer vector with ``A_ii`` on the
diagonal positions and ``2 A_ij`` off the diagonal, i.e. the coefficients of
``sum_{i<=j} a_ij X_ij <= b``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from pathlib import Path

import numpy as np

from .stable_sets import StableSetFamily, scaled_stable_set_matrices, stable_set_matrices

TOL_MEMBER = 1e-7


def triu_pairs(k: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(k) for j in range(i, k)]


def upper_vector(x: np.ndarray) -> np.ndarray:
    i, j = np.triu_indices(x.shape[-1])
    return x[..., i, j]


@dataclass(frozen=True)
class LinearInequality:
    coeff: np.ndarray
    rhs: float
    label: str = ""

    @property
    def k(self) -> int:
        return self.coeff.shape[0]

    def lhs(self, x: np.ndarray) -> float:
        return float(np.sum(self.coeff * x))

    def violation(self, x: np.ndarray) -> float:
        """``<A, X> - b``; positive means violated."""
        return self.lhs(x) - self.rhs

    def upper_form(self) -> tuple[tuple[Fraction, ...], Fraction]:
        a = [Fraction(self.coeff[i, j]).limit_denominator(10**6) * (1 if i == j else 2)
             for i, j in triu_pairs(self.k)]
        return tuple(a), Fraction(self.rhs).limit_denominator(10**6)

    def canonical(self) -> tuple[tuple[int, ...], int]:
        """Integer upper form with gcd 1 (positive scaling only, sense kept)."""
        a, b = self.upper_form()
        den = math.lcm(*(q.denominator for q in (*a, b)))
        ints = [int(q * den) for q in (*a, b)]
        g = math.gcd(*ints) or 1
        ints = [v // g for v in ints]
        return tuple(ints[:-1]), ints[-1]

    @property
    def homogeneous(self) -> bool:
        return self.rhs == 0


def inequality_from_upper(k: int, a, b, label: str = "") -> LinearInequality:
    coeff = np.zeros((k, k))
    for (i, j), v in zip(triu_pairs(k), a):
        if i == j:
            coeff[i, i] = v
        else:
            coeff[i, j] = coeff[j, i] = v / 2
    return LinearInequality(coeff, float(b), label)


@dataclass
class FacetSystem:
    k: int
    inequalities: list[LinearInequality]
    source: str = "enumerated"
    # facet index -> bitmask over vertices (bit v = subset mask v of K0_k) that are tight
    tight_sets: list[int] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.inequalities)

    def canonical_set(self) -> set:
        return {ineq.canonical() for ineq in self.inequalities}

    def matrix(self) -> tuple[np.ndarray, np.ndarray]:
        """Rows of upper-form coefficients and the right-hand sides."""
        a = np.array([[float(v) for v in ineq.upper_form()[0]] for ineq in self.inequalities])
        b = np.array([ineq.rhs for ineq in self.inequalities])
        return a.reshape(len(self.inequalities), self.k * (self.k + 1) // 2), b

    def to_ieq(self) -> str:
        """PORTA-like listing: ``(  i) +a x1 -b x2 ... <= rhs`` over upper coordinates."""
        names = [f"x{i + 1}{j + 1}" if self.k < 10 else f"x{i + 1}_{j + 1}"
                 for i, j in triu_pairs(self.k)]
        lines = [f"DIM = {len(names)}", "", "VALID", " ".join("0" for _ in names), "",
                 "INEQUALITIES_SECTION"]
        for idx, ineq in enumerate(sorted(self.inequalities, key=lambda q: q.canonical()), 1):
            a, b = ineq.canonical()
            terms = "".join(f"{v:+d}{name}" for v, name in zip(a, names) if v)
            lines.append(f"({idx:4d}) {terms} <= {b}")
        lines += ["", "END"]
        return "\n".join(lines) + "\n"

    def write_ieq(self, path: str | Path) -> None:
        Path(path).write_text(self.to_ieq())


# --- hand-coded systems for k = 2, 3 ------------------------------------------

def _ineq(size: int, terms: dict[tuple[int, int], float], rhs: float, label: str) -> LinearInequality:
    c = np.zeros((size, size))
    for (a, b), v in terms.items():
        if a == b:
            c[a, a] += v
        else:
            c[a, b] += v / 2
            c[b, a] += v / 2
    return LinearInequality(c, rhs, label)


def esc2_inequalities(i: int, j: int, size: int | None = None) -> list[LinearInequality]:
    """The four facets of STAB^2 of two non-adjacent vertices at (1-based) positions i, j."""
    if i == j:
        raise ValueError("indices must differ")
    size = size or max(i, j)
    a, b = i - 1, j - 1
    ab = (min(a, b), max(a, b))
    return [
        _ineq(size, {ab: -1}, 0, "off>=0"),
        _ineq(size, {ab: 1, (a, a): -1}, 0, "off<=diag_i"),
        _ineq(size, {ab: 1, (b, b): -1}, 0, "off<=diag_j"),
        _ineq(size, {(a, a): 1, (b, b): 1, ab: -1}, 1, "diag_sum<=1+off"),
    ]


def esc3_inequalities(i: int, j: int, l: int, size: int | None = None) -> list[LinearInequality]:
    if len({i, j, l}) != 3:
        raise ValueError("indices must be distinct")
    size = size or max(i, j, l)
    a, b, c = sorted((i - 1, j - 1, l - 1))
    out = []
    for p, q in ((a, b), (a, c), (b, c)):
        out += esc2_inequalities(p + 1, q + 1, size)
    ab, ac, bc = (a, b), (a, c), (b, c)
    out += [
        _ineq(size, {ab: 1, ac: 1, (a, a): -1, bc: -1}, 0, "triangle_i"),
        _ineq(size, {ab: 1, bc: 1, (b, b): -1, ac: -1}, 0, "triangle_j"),
        _ineq(size, {ac: 1, bc: 1, (c, c): -1, ab: -1}, 0, "triangle_l"),
        _ineq(size, {(a, a): 1, (b, b): 1, (c, c): 1, ab: -1, ac: -1, bc: -1}, 1, "diag_sum<=1+offs"),
    ]
    return out


# --- double description ------------------------------------------------------

def _exact_inverse(b: list[list[int]]) -> list[list[Fraction]]:
    n = len(b)
    m = [[Fraction(v) for v in row] + [Fraction(int(r == c)) for c in range(n)]
         for r, row in enumerate(b)]
    for col in range(n):
        piv = next(r for r in range(col, n) if m[r][col] != 0)
        m[col], m[piv] = m[piv], m[col]
        pv = m[col][col]
        m[col] = [v / pv for v in m[col]]
        for r in range(n):
            if r != col and m[r][col] != 0:
                f = m[r][col]
                m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    return [row[n:] for row in m]


def _exact_rank(rows: list[list[int]]) -> int:
    m = [[Fraction(v) for v in r] for r in rows]
    rank, ncol = 0, len(m[0]) if m else 0
    for col in range(ncol):
        piv = next((r for r in range(rank, len(m)) if m[r][col] != 0), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        for r in range(len(m)):
            if r != rank and m[r][col] != 0:
                f = m[r][col] / m[rank][col]
                m[r] = [x - f * y for x, y in zip(m[r], m[rank])]
        rank += 1
    return rank


def _normalise(rays: np.ndarray) -> np.ndarray:
    g = np.gcd.reduce(rays, axis=1)
    g[g == 0] = 1
    return rays // g[:, None]


def double_description(gen: np.ndarray, chunk: int = 4_000_000) -> tuple[np.ndarray, np.ndarray]:
    """Extreme rays of the pointed cone ``{h : gen @ h >= 0}``.

    ``gen`` is an integer ``(m, D)`` matrix of rank ``D`` with ``m <= 64``.
    Returns ``(rays, tight)`` where ``tight[r]`` is the bitmask of rows of
    ``gen`` on which ray ``r`` is zero.  Arithmetic is exact (int64 with an
    overflow guard; rays are kept gcd-reduced).
    """
    gen = np.asarray(gen, dtype=np.int64)
    m, dim = gen.shape
    if m > 64:
        raise ValueError("at most 64 constraints supported (uint64 tight sets)")
    basis: list[int] = []
    for r in range(m):
        if _exact_rank([list(map(int, gen[i])) for i in basis + [r]]) == len(basis) + 1:
            basis.append(r)
        if len(basis) == dim:
            break
    if len(basis) < dim:
        raise ValueError("cone is not pointed (constraint matrix rank deficient)")
    inv = _exact_inverse([list(map(int, gen[i])) for i in basis])
    rays = []
    for c in range(dim):
        col = [inv[r][c] for r in range(dim)]
        den = math.lcm(*(q.denominator for q in col))
        rays.append([int(q * den) for q in col])
    rays = _normalise(np.array(rays, dtype=np.int64))
    full = np.uint64(0)
    for b in basis:
        full |= np.uint64(1) << np.uint64(b)
    tight = np.array([full & ~(np.uint64(1) << np.uint64(b)) for b in basis], dtype=np.uint64)

    for row in (r for r in range(m) if r not in basis):
        g = gen[row]
        if np.abs(rays).max() * np.abs(g).sum() > 2**62:
            raise OverflowError("double description intermediate exceeds int64")
        vals = rays @ g
        pos = np.flatnonzero(vals > 0)
        neg = np.flatnonzero(vals < 0)
        zero = np.flatnonzero(vals == 0)
        bit = np.uint64(1) << np.uint64(row)
        new_rays, new_tight = [], []
        if len(pos) and len(neg):
            inter = tight[pos][:, None] & tight[neg][None, :]
            pa, na = np.nonzero(np.bitwise_count(inter) >= dim - 2)
            cand = inter[pa, na]
            step = max(1, chunk // max(1, len(rays)))
            keep = np.zeros(len(cand), dtype=bool)
            for s in range(0, len(cand), step):
                c = cand[s:s + step]
                contains = (tight[None, :] & c[:, None]) == c[:, None]
                keep[s:s + step] = contains.sum(axis=1) == 2
            pa, na, cand = pa[keep], na[keep], cand[keep]
            if len(pa):
                p_idx, n_idx = pos[pa], neg[na]
                vp = vals[p_idx][:, None]
                vn = vals[n_idx][:, None]
                if (np.abs(rays).max() * max(np.abs(vp).max(), np.abs(vn).max())) > 2**62:
                    raise OverflowError("double description intermediate exceeds int64")
                comb = vp * rays[n_idx] - vn * rays[p_idx]
                new_rays.append(_normalise(comb))
                new_tight.append(cand | bit)
        kept = np.concatenate([pos, zero])
        tight_kept = tight[kept].copy()
        tight_kept[len(pos):] |= bit
        rays = np.concatenate([rays[kept]] + new_rays)
        tight = np.concatenate([tight_kept] + new_tight)
    return rays, tight


def facets_from_vertices(vertices: np.ndarray) -> tuple[list[tuple[np.ndarray, int]], list[int]]:
    """Facets ``a @ u <= b`` of ``conv(vertices)`` for a full-dimensional integer point set."""
    v = np.asarray(vertices, dtype=np.int64)
    gen = np.hstack([np.ones((len(v), 1), dtype=np.int64), v])
    rays, tight = double_description(gen)
    out = [(-r[1:], int(r[0])) for r in rays]
    return out, [int(t) for t in tight]


MAX_K_DEFAULT = 5


@lru_cache(maxsize=None)
def _facets_cached(k: int) -> FacetSystem:
    masks = range(1 << k)
    verts = np.array([[(s >> i & 1) * (s >> j & 1) for i, j in triu_pairs(k)] for s in masks])
    facets, tight = facets_from_vertices(verts)
    ineqs = [inequality_from_upper(k, a, b, "facet") for a, b in facets]
    order = sorted(range(len(ineqs)), key=lambda i: ineqs[i].canonical())
    return FacetSystem(k, [ineqs[i] for i in order], "enumerated", [tight[i] for i in order])


def facets_stab2_empty(k: int, allow_long: bool = False) -> FacetSystem:
    """All facets of STAB^2 of the edgeless graph on ``k`` vertices.

    Computed by double description from the ``2**k`` vertices ``s s^T``.
    ``k = 6`` is very expensive and must be requested with ``allow_long``.
    """
    if not 2 <= k <= 6:
        raise ValueError(f"k={k} outside 2..6")
    if k > MAX_K_DEFAULT and not allow_long:
        raise ValueError("k=6 facet enumeration is long-running; pass allow_long=True")
    return _facets_cached(k)


def handcoded_facets(k: int) -> FacetSystem:
    if k == 2:
        return FacetSystem(2, esc2_inequalities(1, 2), "handcoded")
    if k == 3:
        return FacetSystem(3, esc3_inequalities(1, 2, 3), "handcoded")
    raise ValueError("hand-coded systems exist for k = 2, 3 only")


# --- projection onto conv of stable set matrices ----------------------------

@dataclass
class MembershipResult:
    inside: bool
    distance: float
    lam: np.ndarray
    iterations: int = 0
    converged: bool = True


def project_simplex(v: np.ndarray, mask: np.ndarray | None = None) -> np.ndarray:
    """Row-wise Euclidean projection onto the simplex (restricted to ``mask``)."""
    v = np.atleast_2d(np.asarray(v, dtype=float))
    if mask is not None:
        v = np.where(mask, v, -1e300)
    u = -np.sort(-v, axis=1)
    css = np.cumsum(u, axis=1) - 1.0
    ind = np.arange(1, v.shape[1] + 1)
    cond = u - css / ind > 0
    rho = v.shape[1] - 1 - np.argmax(cond[:, ::-1], axis=1)
    theta = css[np.arange(len(v)), rho] / (rho + 1)
    return np.maximum(v - theta[:, None], 0.0)


def _polish(lam, gram, lin, mask, const):
    """Re-solve the equality-constrained QP on the current support."""
    out = lam.copy()
    for r in range(len(lam)):
        supp = np.flatnonzero(lam[r] > 1e-13)
        if len(supp) == 0:
            continue
        g = gram[np.ix_(supp, supp)]
        kkt = np.zeros((len(supp) + 1, len(supp) + 1))
        kkt[:-1, :-1] = g
        kkt[:-1, -1] = 1.0
        kkt[-1, :-1] = 1.0
        rhs = np.concatenate([lin[r, supp], [1.0]])
        sol = np.linalg.lstsq(kkt, rhs, rcond=None)[0][:-1]
        if np.all(sol >= -1e-15):
            cand = np.zeros_like(lam[r])
            cand[supp] = np.maximum(sol, 0)
            cand /= cand.sum()
            f_old = 0.5 * lam[r] @ gram @ lam[r] - lin[r] @ lam[r]
            f_new = 0.5 * cand @ gram @ cand - lin[r] @ cand
            if f_new <= f_old + 1e-15 * (1 + abs(const[r])):
                out[r] = cand
    return out


def project_batch(queries: np.ndarray, generators: np.ndarray, mask: np.ndarray | None = None,
                  max_iter: int = 5000, gap_tol: float = 1e-10):
    """Nearest points of ``conv(generators)`` to each query (Frobenius norm).

    ``queries`` is ``(C, k, k)``, ``generators`` is ``(t, k, k)`` and the
    optional boolean ``mask`` of shape ``(C, t)`` restricts each query to a
    subset of the generators.  Uses accelerated projected gradient on the
    simplex with gradient restarts and a support polish.  Returns
    ``(distance, lam, iterations, converged)``.
    """
    q = np.asarray(queries, dtype=float).reshape(len(queries), -1)
    mflat = np.asarray(generators, dtype=float).reshape(len(generators), -1)
    c, t = len(q), len(mflat)
    if mask is None:
        mask = np.ones((c, t), dtype=bool)
    gram = mflat @ mflat.T
    lin = q @ mflat.T
    const = np.einsum("ij,ij->i", q, q)
    lipschitz = max(np.linalg.eigvalsh(gram)[-1], 1e-12)
    lam = project_simplex(np.where(mask, 1.0, 0.0) / mask.sum(axis=1, keepdims=True), mask)
    y = lam.copy()
    theta = np.ones(c)
    active = np.ones(c, dtype=bool)
    it = 0
    for it in range(1, max_iter + 1):
        idx = np.flatnonzero(active)
        grad_y = y[idx] @ gram - lin[idx]
        new = project_simplex(y[idx] - grad_y / lipschitz, mask[idx])
        restart = np.einsum("ij,ij->i", grad_y, new - lam[idx]) > 0
        th = theta[idx]
        th_next = 0.5 * (1 + np.sqrt(1 + 4 * th**2))
        beta = np.where(restart, 0.0, (th - 1) / th_next)
        th_next = np.where(restart, 1.0, th_next)
        y[idx] = new + beta[:, None] * (new - lam[idx])
        lam[idx] = new
        theta[idx] = th_next
        if it % 25 == 0 or it == max_iter:
            lam[idx] = _polish(lam[idx], gram, lin[idx], mask[idx], const[idx])
            grad = lam[idx] @ gram - lin[idx]
            gap = np.einsum("ij,ij->i", grad, lam[idx]) - np.where(mask[idx], grad, np.inf).min(axis=1)
            dist2 = np.maximum(const[idx] + np.einsum("ij,ij->i", lam[idx] @ gram, lam[idx])
                               - 2 * np.einsum("ij,ij->i", lin[idx], lam[idx]), 0)
            # stop on small FW gap, or when the point is (numerically) inside
            done = (gap <= gap_tol) | (dist2 <= 1e-28)
            y[idx[done]] = lam[idx[done]]
            active[idx[done]] = False
            if not active.any():
                break
    resid = q - lam @ mflat
    dist = np.sqrt(np.einsum("ij,ij->i", resid, resid))
    return dist, lam, it, ~active


def project_onto_stab2(xq: np.ndarray, f: StableSetFamily, scaled: bool = False,
                       tol: float = TOL_MEMBER, max_iter: int = 5000) -> MembershipResult:
    """Distance from ``xq`` to STAB^2 (or SSTAB^2 when ``scaled``) of the family's graph."""
    xq = np.asarray(xq, dtype=float)
    if xq.shape != (f.k, f.k):
        raise ValueError(f"query shape {xq.shape} does not match family order {f.k}")
    gens = scaled_stable_set_matrices(f) if scaled else stable_set_matrices(f)
    dist, lam, it, conv = project_batch(xq[None], gens, max_iter=max_iter)
    return MembershipResult(bool(dist[0] <= tol), float(dist[0]), lam[0], it, bool(conv[0]))
