"""Primal-dual interior point method for SDPs over PSD and nonnegative blocks.

Infeasible path-following with the HKM direction and Mehrotra's
predictor-corrector.  The Schur complement is assembled densely (PSD blocks
through the symmetric Kronecker product in svec coordinates) and factored
once per iteration by Cholesky.

Internally the problem is the minimisation ``min <c, x>`` with ``c = -C``;
reported values use the maximisation sign of :class:`~esh.model.SdpProblem`.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .model import NONNEG, PSD, SdpProblem

logger = logging.getLogger(__name__)

SQRT2 = np.sqrt(2.0)

OPTIMAL = "optimal"
MAX_ITER = "max_iter"
INFEASIBLE = "infeasible_suspect"
NUMERICAL = "numerical_failure"


@dataclass
class SolverSettings:
    tol_gap: float = 1e-7
    tol_feas: float = 1e-7
    max_iter: int = 200
    step_frac: float = 0.98
    stall_iter: int = 15
    # once tol_gap is met, keep iterating towards polish * tol_gap while
    # progress continues; polish = 1 stops at the first certified iterate
    polish: float = 0.01
    polish_stall: int = 4
    verbose: bool = False

    def __post_init__(self):
        if min(self.tol_gap, self.tol_feas) <= 0:
            raise ValueError("tolerances must be positive")
        if not 0 < self.polish <= 1:
            raise ValueError("polish must lie in (0, 1]")
        if not 0 < self.step_frac < 1:
            raise ValueError("step_frac must lie in (0, 1)")


@dataclass
class Solution:
    status: str
    primal: list[np.ndarray]
    dual_y: np.ndarray
    dual_slack: list[np.ndarray]
    objective: float
    dual_objective: float
    gap: float
    primal_res: float
    dual_res: float
    iterations: int
    seconds: float = 0.0
    history: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.status == OPTIMAL

    def log_lines(self) -> list[str]:
        head = "iter mu gap primal_res dual_res alpha_p alpha_d"
        rows = [f"{h['iter']} {h['mu']:.3e} {h['gap']:.3e} {h['primal_res']:.3e} "
                f"{h['dual_res']:.3e} {h['alpha_p']:.3f} {h['alpha_d']:.3f}" for h in self.history]
        return [head] + rows


class SolverError(RuntimeError):
    pass


# --- vectorisation ----------------------------------------------------------------

class _Layout:
    """Offsets of every block inside the concatenated svec/nonneg vector."""

    def __init__(self, blocks):
        self.blocks = blocks
        self.offsets, off = [], 0
        self.tri = []
        for kind, d in blocks:
            self.offsets.append(off)
            if kind == PSD:
                iu = np.triu_indices(d)
                self.tri.append(iu)
                off += len(iu[0])
            else:
                self.tri.append(None)
                off += d
        self.size = off
        self.nu = sum(d for _, d in blocks)

    def index(self, blk, r, c):
        kind, d = self.blocks[blk]
        if kind == NONNEG:
            return self.offsets[blk] + r
        # row-major upper triangle position of (r, c), r <= c
        return self.offsets[blk] + r * d - r * (r - 1) // 2 + (c - r)

    def scale(self, blk, r, c):
        if self.blocks[blk][0] == PSD and r != c:
            return SQRT2
        return 1.0

    def psd_blocks(self):
        return [b for b, (kind, _) in enumerate(self.blocks) if kind == PSD]

    def lp_slice(self):
        idx = [np.arange(self.offsets[b], self.offsets[b] + d)
               for b, (kind, d) in enumerate(self.blocks) if kind == NONNEG]
        return np.concatenate(idx) if idx else np.zeros(0, dtype=int)

    def smat(self, v, blk):
        d = self.blocks[blk][1]
        seg = v[self.offsets[blk]:self.offsets[blk] + d * (d + 1) // 2]
        iu = self.tri[blk]
        m = np.zeros((d, d))
        off = iu[0] != iu[1]
        m[iu] = np.where(off, seg / SQRT2, seg)
        return m + np.triu(m, 1).T

    def svec(self, mat, blk):
        iu = self.tri[blk]
        vals = mat[iu]
        return np.where(iu[0] != iu[1], vals * SQRT2, vals)

    def unpack(self, v):
        out = []
        for b, (kind, d) in enumerate(self.blocks):
            if kind == PSD:
                out.append(self.smat(v, b))
            else:
                out.append(v[self.offsets[b]:self.offsets[b] + d].copy())
        return out


def vectorise(p: SdpProblem):
    """Return ``(layout, A, b, C)`` with ``A`` sparse CSR over svec coordinates."""
    lay = _Layout(p.blocks)
    if p.entries:
        con, blk, r, c, v = (np.array(t) for t in zip(*p.entries))
        blk, r, c, con = blk.astype(int), r.astype(int), c.astype(int), con.astype(int)
        cols = np.array([lay.index(b, i, j) for b, i, j in zip(blk, r, c)], dtype=int)
        scale = np.array([lay.scale(b, i, j) for b, i, j in zip(blk, r, c)])
        a = sp.csr_matrix((v * scale, (con, cols)), shape=(p.num_constraints, lay.size))
    else:
        a = sp.csr_matrix((p.num_constraints, lay.size))
    a.sum_duplicates()
    cvec = np.zeros(lay.size)
    for b, i, j, v in p.objective:
        cvec[lay.index(b, i, j)] += v * lay.scale(b, i, j)
    return lay, a, np.array(p.rhs, dtype=float), cvec


def independent_rows(a: sp.csr_matrix, b: np.ndarray) -> np.ndarray:
    """Indices of rows kept after dropping exact (scaled) duplicates.

    Raises :class:`SolverError` when two parallel rows ask for different
    right-hand sides.
    """
    a = a.tocsr()
    seen: dict = {}
    keep = []
    for i in range(a.shape[0]):
        lo, hi = a.indptr[i], a.indptr[i + 1]
        cols, vals = a.indices[lo:hi], a.data[lo:hi]
        nz = vals != 0
        cols, vals = cols[nz], vals[nz]
        if not len(cols):
            if abs(b[i]) > 1e-12:
                raise SolverError(f"constraint {i} reads 0 = {b[i]}")
            continue
        order = np.argsort(cols)
        cols, vals = cols[order], vals[order]
        lead = vals[0]
        key = (cols.tobytes(), np.round(vals / lead, 12).tobytes())
        if key in seen:
            j, lead_j = seen[key]
            if abs(b[i] / lead - b[j] / lead_j) > 1e-12 * (1 + abs(b[j] / lead_j)):
                raise SolverError(f"constraints {j} and {i} are parallel but inconsistent")
            continue
        seen[key] = (i, lead)
        keep.append(i)
    return np.array(keep, dtype=int)


def _skron(x: np.ndarray, w: np.ndarray, iu) -> np.ndarray:
    """svec matrix of the operator ``U -> (X U W + W U X) / 2`` on symmetric ``U``."""
    i, j = iu
    c = np.where(i == j, 0.5, 1.0 / SQRT2)
    t = (x[np.ix_(j, i)] * w[np.ix_(i, j)] + x[np.ix_(j, j)] * w[np.ix_(i, i)]
         + x[np.ix_(i, i)] * w[np.ix_(j, j)] + x[np.ix_(i, j)] * w[np.ix_(j, i)])
    return c[:, None] * t * c[None, :]


def _max_step(x: np.ndarray, dx: np.ndarray) -> float:
    """Largest ``a`` with ``x + a dx`` psd, for positive definite ``x``."""
    try:
        l = np.linalg.cholesky(x)
    except np.linalg.LinAlgError:
        return 0.0
    linv = sla.solve_triangular(l, np.eye(len(x)), lower=True, check_finite=False)
    ev = np.linalg.eigvalsh(linv @ dx @ linv.T)[0]
    return np.inf if ev >= 0 else -1.0 / ev


def _sym(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.T)


# --- the solver --------------------------------------------------------------------------

def solve(p: SdpProblem, settings: SolverSettings | None = None) -> Solution:
    s = settings or SolverSettings()
    t0 = time.perf_counter()
    lay, a_full, b_full, cmax = vectorise(p)
    keep = independent_rows(a_full, b_full)
    a, b = a_full[keep], b_full[keep]
    c = -cmax
    m = len(b)
    at = a.T.tocsr()
    psd = lay.psd_blocks()
    lp = lay.lp_slice()
    a_lp = a[:, lp] if len(lp) else None
    a_psd = {blk: a[:, lay.offsets[blk]:lay.offsets[blk] + len(lay.tri[blk][0])].tocsr()
             for blk in psd}

    norm_b = 1.0 + np.linalg.norm(b)
    norm_c = 1.0 + np.linalg.norm(c)
    tau = 1.0 + (np.abs(b).max() if m else 0.0)
    x = np.zeros(lay.size)
    z = np.zeros(lay.size)
    for blk in psd:
        d = lay.blocks[blk][1]
        x[lay.offsets[blk]:lay.offsets[blk] + len(lay.tri[blk][0])] = lay.svec(tau * np.eye(d), blk)
        z[lay.offsets[blk]:lay.offsets[blk] + len(lay.tri[blk][0])] = lay.svec(tau * np.eye(d), blk)
    x[lp] = tau
    z[lp] = tau
    y = np.zeros(m)

    history = []
    status = MAX_ITER
    it = 0
    rel_gap = pres = dres = np.inf
    bp = bd = None
    best_gap = best_merit = np.inf
    best_it = 0

    def seg(v, blk):
        return v[lay.offsets[blk]:lay.offsets[blk] + len(lay.tri[blk][0])]

    for it in range(1, s.max_iter + 1):
        rp = b - a @ x
        rd = c - at @ y - z
        mu = x @ z / lay.nu
        pobj, dobj = c @ x, b @ y
        rel_gap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
        pres = np.linalg.norm(rp) / norm_b
        dres = np.linalg.norm(rd) / norm_c
        # certificate pair: the smallest bound among dual-feasible iterates
        # and the primal-feasible iterate closest to it.  Near degenerate
        # optima the dual keeps improving after the primal starts to drift.
        if dres <= s.tol_feas and (bd is None or -dobj < bd[2]):
            bd = (y.copy(), z.copy(), -dobj, dres, it)
        if pres <= s.tol_feas:
            ref = bd[2] if bd is not None else -dobj
            if bp is None or abs(ref + pobj) <= abs(ref - bp[1]):
                bp = (x.copy(), -pobj, pres, it)
        if bp is not None and bd is not None:
            pair_gap = abs(bd[2] - bp[1]) / (1.0 + abs(bp[1]) + abs(bd[2]))
            if pair_gap < best_gap * 0.9:
                best_gap, best_it = pair_gap, it
            if pair_gap <= s.tol_gap * s.polish:
                status = OPTIMAL
                it -= 1
                break
        merit = max(rel_gap / s.tol_gap, pres / s.tol_feas, dres / s.tol_feas)
        if merit < best_merit * 0.9:
            best_merit, best_it = merit, it
        certified = best_gap <= s.tol_gap
        if it - best_it >= (s.polish_stall if certified else s.stall_iter):
            status = OPTIMAL if certified else NUMERICAL
            break
        if abs(dobj) > 1e10 * (1 + abs(pobj)) or abs(pobj) > 1e10 * (1 + abs(dobj)):
            status = INFEASIBLE
            break

        xs = {blk: lay.smat(x, blk) for blk in psd}
        zs = {blk: lay.smat(z, blk) for blk in psd}
        ws = {}
        schur = np.zeros((m, m))
        try:
            for blk in psd:
                lz = np.linalg.cholesky(zs[blk])
                lzi = sla.solve_triangular(lz, np.eye(len(lz)), lower=True, check_finite=False)
                ws[blk] = lzi.T @ lzi
                k = _skron(xs[blk], ws[blk], lay.tri[blk])
                ak = a_psd[blk] @ k
                schur += a_psd[blk] @ ak.T
        except np.linalg.LinAlgError:
            status = OPTIMAL if best_gap <= s.tol_gap else NUMERICAL
            break
        if len(lp):
            dlp = x[lp] / z[lp]
            schur += (a_lp @ sp.diags(dlp) @ a_lp.T).toarray()

        factor = None
        reg = 1e-12 * max(1.0, np.abs(np.diag(schur)).max(initial=1.0))
        for attempt in range(4):
            try:
                factor = sla.cho_factor(schur + reg * np.eye(m) if attempt else schur,
                                        lower=True, check_finite=False)
                break
            except (np.linalg.LinAlgError, sla.LinAlgError):
                reg *= 10
        if factor is None:
            status = OPTIMAL if best_gap <= s.tol_gap else NUMERICAL
            break

        def direction(sigma, corr_psd=None, corr_lp=None):
            # H = sigma mu W - X - sym(X Rd W) - corrector
            h = np.zeros(lay.size)
            for blk in psd:
                rdm = lay.smat(rd, blk)
                hm = sigma * mu * ws[blk] - xs[blk] - _sym(xs[blk] @ rdm @ ws[blk])
                if corr_psd is not None:
                    hm -= corr_psd[blk]
                h[lay.offsets[blk]:lay.offsets[blk] + len(lay.tri[blk][0])] = lay.svec(hm, blk)
            if len(lp):
                hl = sigma * mu / z[lp] - x[lp] - x[lp] * rd[lp] / z[lp]
                if corr_lp is not None:
                    hl -= corr_lp
                h[lp] = hl
            rhs = rp - a @ h
            dy = sla.cho_solve(factor, rhs, check_finite=False)
            for _ in range(2):
                # refinement against the unregularised Schur matrix
                dy += sla.cho_solve(factor, rhs - schur @ dy, check_finite=False)
            dz = rd - at @ dy
            dx = np.zeros(lay.size)
            dxm, dzm = {}, {}
            for blk in psd:
                dzm[blk] = lay.smat(dz, blk)
                dxm[blk] = sigma * mu * ws[blk] - xs[blk] - _sym(xs[blk] @ dzm[blk] @ ws[blk])
                if corr_psd is not None:
                    dxm[blk] -= corr_psd[blk]
                dxm[blk] = _sym(dxm[blk])
                dx[lay.offsets[blk]:lay.offsets[blk] + len(lay.tri[blk][0])] = lay.svec(dxm[blk], blk)
            if len(lp):
                dl = sigma * mu / z[lp] - x[lp] - x[lp] * dz[lp] / z[lp]
                if corr_lp is not None:
                    dl -= corr_lp
                dx[lp] = dl
            return dx, dy, dz, dxm, dzm

        def steps(dx, dz, dxm, dzm):
            ap = ad = 1e30
            for blk in psd:
                ap = min(ap, _max_step(xs[blk], dxm[blk]))
                ad = min(ad, _max_step(zs[blk], dzm[blk]))
            if len(lp):
                neg = dx[lp] < 0
                if neg.any():
                    ap = min(ap, np.min(-x[lp][neg] / dx[lp][neg]))
                neg = dz[lp] < 0
                if neg.any():
                    ad = min(ad, np.min(-z[lp][neg] / dz[lp][neg]))
            return ap, ad

        dx, dy, dz, dxm, dzm = direction(0.0)
        ap, ad = steps(dx, dz, dxm, dzm)
        ap, ad = min(1.0, ap), min(1.0, ad)
        ap_aff, ad_aff = ap, ad
        mu_aff = (x + ap * dx) @ (z + ad * dz) / lay.nu
        sigma = min(1.0, max(0.0, (mu_aff / mu) ** 3)) if mu > 0 else 0.0
        corr_psd = {blk: _sym(dxm[blk] @ dzm[blk] @ ws[blk]) for blk in psd}
        corr_lp = dx[lp] * dz[lp] / z[lp] if len(lp) else None
        dx, dy, dz, dxm, dzm = direction(sigma, corr_psd, corr_lp)
        ap, ad = steps(dx, dz, dxm, dzm)
        # shorter steps while the predictor is blocked early
        frac = min(s.step_frac, 0.9 + 0.09 * min(ap_aff, ad_aff))
        ap, ad = min(1.0, frac * ap), min(1.0, frac * ad)
        x = x + ap * dx
        y = y + ad * dy
        z = z + ad * dz
        history.append(dict(iter=it, mu=mu, gap=rel_gap, primal_res=pres, dual_res=dres,
                            alpha_p=ap, alpha_d=ad, pobj=-pobj, dobj=-dobj))
        if s.verbose:
            logger.info("%3d mu=%.2e gap=%.2e pres=%.2e dres=%.2e ap=%.3f ad=%.3f",
                        it, mu, rel_gap, pres, dres, ap, ad)
        if ap < 1e-10 and ad < 1e-10:
            status = OPTIMAL if best_gap <= s.tol_gap else NUMERICAL
            break
    else:
        it = s.max_iter
        if best_gap <= s.tol_gap:
            status = OPTIMAL

    pobj_now, dobj_now = -(c @ x), -(b @ y)
    if bp is not None:
        x, pobj_now, pres = bp[0], bp[1], bp[2]
    if bd is not None:
        y, z, dobj_now, dres = bd[0], bd[1], bd[2], bd[3]
    rel_gap = abs(dobj_now - pobj_now) / (1.0 + abs(pobj_now) + abs(dobj_now))
    y_full = np.zeros(len(b_full))
    y_full[keep] = y
    return Solution(status=status, primal=lay.unpack(x), dual_y=-y_full, dual_slack=lay.unpack(z),
                    objective=pobj_now, dual_objective=dobj_now, gap=rel_gap, primal_res=pres,
                    dual_res=dres, iterations=it, seconds=time.perf_counter() - t0,
                    history=history)


# --- independent verification --------------------------------------------------------

@dataclass
class ResidualReport:
    primal_res: float
    dual_res: float
    complementarity: float
    min_eig: list[float]
    violated: list[int]
    primal_objective: float
    dual_objective: float

    def feasible(self, tol: float = 1e-6) -> bool:
        return self.primal_res <= tol and min(self.min_eig + [0.0]) >= -tol


def _block_min(kind: str, v: np.ndarray) -> float:
    if kind == PSD:
        return float(np.linalg.eigvalsh(np.asarray(v, dtype=float))[0]) if len(v) else 0.0
    return float(np.min(v)) if len(v) else 0.0


def _inner(p: SdpProblem, blk: int, r: int, c: int, v, prim) -> object:
    if p.blocks[blk][0] == PSD:
        return v * prim[blk][r, c] * (1 if r == c else 2)
    return v * prim[blk][r]


def primal_residuals(p: SdpProblem, blocks: list[np.ndarray], tol: float = 1e-6) -> ResidualReport:
    """Constraint residuals, cone margins and objective of a candidate point.

    Evaluated entry by entry from the problem data in extended precision.
    """
    ld = np.longdouble
    prim = [np.asarray(v, dtype=ld) for v in blocks]
    if len(prim) != len(p.blocks):
        raise ValueError(f"expected {len(p.blocks)} blocks, got {len(prim)}")
    lhs = np.zeros(p.num_constraints, dtype=ld)
    for con, blk, r, c, v in p.entries:
        lhs[con] += _inner(p, blk, r, c, ld(v), prim)
    pobj = ld(0)
    for blk, r, c, v in p.objective:
        pobj += _inner(p, blk, r, c, ld(v), prim)
    res = lhs - np.array(p.rhs, dtype=ld)
    mins = [_block_min(kind, blocks[b]) for b, (kind, _) in enumerate(p.blocks)]
    violated = [int(i) for i in np.flatnonzero(np.abs(res) > tol)]
    return ResidualReport(float(np.sqrt(np.sum(res**2))), 0.0, 0.0, mins, violated,
                          float(pobj), float("nan"))


def check_solution(p: SdpProblem, sol: Solution, tol: float = 1e-6) -> ResidualReport:
    """Recompute residuals from the raw problem data in extended precision.

    Does not reuse the solver's vectorisation: every constraint is evaluated
    entry by entry on the reported block values.
    """
    ld = np.longdouble
    rep = primal_residuals(p, sol.primal, tol)
    prim = [np.asarray(v, dtype=ld) for v in sol.primal]
    slack = [np.asarray(v, dtype=ld) for v in sol.dual_slack]
    y = np.asarray(sol.dual_y, dtype=ld)
    # dual: Z = sum y_i A_i - C per block
    zrec = [np.zeros((d, d), dtype=ld) if k == PSD else np.zeros(d, dtype=ld) for k, d in p.blocks]

    def acc(blk, r, c, v):
        if p.blocks[blk][0] == PSD:
            zrec[blk][r, c] += v
            if r != c:
                zrec[blk][c, r] += v
        else:
            zrec[blk][r] += v

    for con, blk, r, c, v in p.entries:
        acc(blk, r, c, ld(v) * y[con])
    for blk, r, c, v in p.objective:
        acc(blk, r, c, -ld(v))
    dres = ld(0)
    comp = ld(0)
    for blk in range(len(p.blocks)):
        dres += np.sum((zrec[blk] - slack[blk]) ** 2)
        comp += np.sum(prim[blk] * slack[blk])
    rep.dual_res = float(np.sqrt(dres))
    rep.complementarity = float(comp)
    rep.dual_objective = float(np.sum(np.array(p.rhs, dtype=ld) * y)) if len(y) else 0.0
    return rep
