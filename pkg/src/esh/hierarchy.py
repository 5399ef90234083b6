"""Bounds from the three subgraph hierarchies and the violated-subgraph search.

ESH adds exact subgraph constraints to the order-(n+1) theta model, CESH
adds them to the trace-one model and SESH adds the scaled variant to the
trace-one model.  A reported ``bound`` is the solver's dual objective,
which is an upper bound on the relaxation value whenever the dual iterate
is feasible.
"""
from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .graphs import Graph, empty_graph, subset
from .model import (EscSelection, SdpProblem, add_escs, all_subsets, build_theta_n,
                    build_theta_nplus1, split_nplus1)
from .polytopes import project_batch
from .solver import Solution, SolverSettings, primal_residuals, solve
from .stable_sets import (ResourceLimitError, alpha_bruteforce, enumerate_stable_sets,
                          scaled_stable_set_matrices, stable_set_matrices)

ESH = "ESH"
CESH = "CESH"
SESH = "SESH"
FORMULATIONS = (ESH, CESH, SESH)

DEFAULT_LEVEL_CAP = 200_000


class HierarchyError(RuntimeError):
    pass


def _check_formulation(name: str) -> str:
    name = name.upper()
    if name not in FORMULATIONS:
        raise ValueError(f"unknown formulation {name!r}; expected one of {FORMULATIONS}")
    return name


def base_problem(g: Graph, formulation: str) -> SdpProblem:
    return build_theta_nplus1(g) if _check_formulation(formulation) == ESH else build_theta_n(g)


def build_problem(g: Graph, formulation: str, subsets: Sequence[Sequence[int]] = (),
                  mode: str = "lambda") -> SdpProblem:
    formulation = _check_formulation(formulation)
    p = base_problem(g, formulation)
    if not subsets:
        return p
    scaled = formulation == SESH
    sel = EscSelection(list(subsets), mode="lambda" if scaled else mode, scaled=scaled)
    return add_escs(p, g, sel)


def solution_matrix(p: SdpProblem, sol: Solution) -> np.ndarray:
    """The order-n matrix variable of either formulation."""
    y = sol.primal[0]
    return split_nplus1(y)[1] if p.formulation == "Tn+1" else y.copy()


def esc_lambdas(p: SdpProblem, sol: Solution) -> dict[tuple[int, ...], np.ndarray]:
    """Convex-combination weights per lambda-mode subset."""
    out = {}
    for rec in p.escs:
        if rec.mode == "lambda":
            out[rec.subset] = sol.primal[-1][rec.var_start:rec.var_stop].copy()
    return out


# --- reports -------------------------------------------------------------------

@dataclass
class TrajectoryPoint:
    round: int
    formulation: str
    bound: float
    escs_added: int
    escs_total: int
    solve_seconds: float


TRAJECTORY_COLUMNS = ("round", "formulation", "bound", "escs_added", "escs_total", "solve_seconds")


@dataclass
class BoundReport:
    formulation: str
    graph: str
    n: int
    m: int
    orders: dict[int, int]
    bound: float
    primal_value: float
    status: str
    iterations: int
    seconds: float
    alpha_lb: int | None = None
    subsets: list[tuple[int, ...]] = field(default_factory=list)
    trajectory: list[TrajectoryPoint] = field(default_factory=list)
    note: str = ""
    problem: SdpProblem | None = field(default=None, repr=False)
    solution: Solution | None = field(default=None, repr=False)

    @property
    def num_escs(self) -> int:
        return sum(self.orders.values())

    @property
    def ok(self) -> bool:
        return self.status == "optimal"

    @property
    def floor(self) -> int:
        """Integer bound implied by the relaxation (with solver slack)."""
        return math.floor(self.bound + 1e-6)

    def floor_gap(self) -> int | None:
        return None if self.alpha_lb is None else self.floor - self.alpha_lb

    def check(self, tol: float = 1e-6) -> list[str]:
        problems = []
        if self.alpha_lb is not None and self.bound < self.alpha_lb - tol:
            problems.append(f"bound {self.bound:.8f} below alpha {self.alpha_lb}")
        for a, b in zip(self.trajectory, self.trajectory[1:]):
            if b.bound > a.bound + tol:
                problems.append(f"bound rose from {a.bound:.8f} to {b.bound:.8f} in round {b.round}")
        return problems

    def selection_label(self) -> str:
        if not self.orders:
            return "none"
        return ";".join(f"{k}:{c}" for k, c in self.orders.items())

    def to_dict(self) -> dict:
        return {
            "formulation": self.formulation, "graph": self.graph, "n": self.n, "m": self.m,
            "orders": {str(k): v for k, v in self.orders.items()}, "escs": self.num_escs,
            "bound": self.bound, "primal_value": self.primal_value, "status": self.status,
            "iterations": self.iterations, "seconds": self.seconds, "alpha": self.alpha_lb,
            "floor": self.floor, "note": self.note,
            "trajectory": [asdict(t) for t in self.trajectory],
        }

    def trajectory_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRAJECTORY_COLUMNS)
        for t in self.trajectory:
            w.writerow([t.round, t.formulation, f"{t.bound:.8f}", t.escs_added, t.escs_total,
                        f"{t.solve_seconds:.3f}"])
        return buf.getvalue()


def _alpha(g: Graph, alpha: int | str | None) -> int | None:
    if alpha == "auto":
        try:
            return alpha_bruteforce(g, time_limit=60.0)
        except ResourceLimitError:
            return None
    return alpha


def _orders(subsets) -> dict[int, int]:
    counts: dict[int, int] = {}
    for s in subsets:
        counts[len(s)] = counts.get(len(s), 0) + 1
    return dict(sorted(counts.items()))


def compute_bound(g: Graph, formulation: str, subsets: Sequence[Sequence[int]] = (),
                  mode: str = "lambda", settings: SolverSettings | None = None,
                  alpha: int | str | None = None) -> BoundReport:
    """Solve one relaxation with the given subgraph selection."""
    formulation = _check_formulation(formulation)
    canon = list(dict.fromkeys(subset(s, g.n) for s in subsets))
    p = build_problem(g, formulation, canon, mode)
    sol = solve(p, settings)
    rep = BoundReport(formulation, g.name, g.n, g.m, _orders(canon), sol.dual_objective,
                      sol.objective, sol.status, sol.iterations, sol.seconds,
                      _alpha(g, alpha), canon, problem=p, solution=sol)
    if not sol.ok:
        rep.note = f"solver stopped with status {sol.status}"
    return rep


def theta(g: Graph, formulation: str = CESH, settings: SolverSettings | None = None) -> BoundReport:
    return compute_bound(g, formulation, (), settings=settings)


def compute_level(g: Graph, formulation: str, k: int, mode: str = "lambda",
                  cap: int = DEFAULT_LEVEL_CAP, settings: SolverSettings | None = None,
                  alpha: int | str | None = None) -> BoundReport:
    """Hierarchy level ``k``: every order-``k`` subset gets a constraint."""
    if not 0 <= k <= g.n:
        raise ValueError(f"level {k} outside 0..{g.n}")
    count = math.comb(g.n, k) if k else 0
    if count > cap:
        raise HierarchyError(
            f"level {k} needs {count} subsets (cap {cap}); use the cutting-plane search instead")
    rep = compute_bound(g, formulation, all_subsets(g.n, k) if k else (), mode, settings, alpha)
    rep.note = (rep.note + f" level {k}").strip()
    return rep


# --- separation ------------------------------------------------------------------

@dataclass
class SearchConfig:
    k: int
    rounds: int = 10
    max_per_round: int = 200
    candidate_budget: int | None = None  # random subsets per round, default 50 n
    tol_viol: float = 1e-4
    seed: int = 0
    mode: str = "lambda"

    def __post_init__(self):
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if self.max_per_round < 1:
            raise ValueError("max_per_round must be >= 1")
        if not 1 <= self.k <= 8:
            raise ValueError("subset order must lie in 1..8")
        if self.tol_viol <= 0:
            raise ValueError("tol_viol must be positive")


class _Scorer:
    """Projection distances of many order-k submatrices at once.

    All subsets share the ``2^k`` generators of the edgeless graph; the
    stable sets of each induced subgraph are selected by a mask.
    """

    def __init__(self, g: Graph, k: int, scaled: bool):
        self.k = k
        fam = enumerate_stable_sets(empty_graph(k))
        self.members = fam.members.astype(bool)
        self.gens = scaled_stable_set_matrices(fam) if scaled else stable_set_matrices(fam)
        self.adj = g.adjacency().astype(bool)

    def mask(self, subsets: np.ndarray) -> np.ndarray:
        # generator i is allowed iff its support is stable in G_I
        sub_adj = self.adj[subsets[:, :, None], subsets[:, None, :]]  # (C, k, k)
        mem = self.members.astype(np.int8)
        conflict = np.einsum("ta,cab,tb->ct", mem, sub_adj.astype(np.int8), mem)
        return conflict == 0

    def score(self, x: np.ndarray, subsets: list[tuple[int, ...]]) -> np.ndarray:
        if not subsets:
            return np.zeros(0)
        idx = np.array(subsets, dtype=int) - 1
        queries = x[idx[:, :, None], idx[:, None, :]]
        dist, _, _, _ = project_batch(queries, self.gens, self.mask(idx))
        return dist


def _candidates(g: Graph, x: np.ndarray, k: int, budget: int,
                rng: np.random.Generator) -> list[tuple[int, ...]]:
    n = g.n
    out = []
    for _ in range(budget):
        out.append(tuple(sorted(int(v) + 1 for v in rng.choice(n, size=k, replace=False))))
    diag = np.diag(x)
    frac = np.minimum(diag, 1.0 - diag)
    seeds = [int(v) for v in np.argsort(-frac, kind="stable")[:k]]
    for v in seeds:
        chosen = [v]
        while len(chosen) < k:
            rest = [u for u in range(n) if u not in chosen]
            gain = [diag[u] + sum(abs(x[u, w]) for w in chosen) for u in rest]
            chosen.append(rest[int(np.argmax(gain))])
        out.append(tuple(sorted(u + 1 for u in chosen)))
    return out


def _swaps(g: Graph, s: tuple[int, ...]) -> list[tuple[int, ...]]:
    nbrs = sorted({u for v in s for u in range(1, g.n + 1) if g.has_edge(u, v)} - set(s))
    out = []
    for out_v in s:
        keep = [v for v in s if v != out_v]
        for u in nbrs:
            out.append(tuple(sorted(keep + [u])))
    return out


def find_violated(g: Graph, x: np.ndarray, k: int, exclude: set, scaled: bool,
                  cfg: SearchConfig, rng: np.random.Generator) -> list[tuple[tuple[int, ...], float]]:
    """Score candidate subsets and return violated ones, most violated first."""
    scorer = _Scorer(g, k, scaled)
    budget = cfg.candidate_budget if cfg.candidate_budget is not None else 50 * g.n
    seen = set(exclude)
    pool = []
    for s in _candidates(g, x, k, budget, rng):
        if s not in seen:
            seen.add(s)
            pool.append(s)
    scores = dict(zip(pool, scorer.score(x, pool)))
    violated = [s for s in pool if scores[s] > cfg.tol_viol]
    # refine around the most violated subsets with single-vertex swaps
    ranked = sorted(violated, key=lambda s: (-scores[s], s))[:cfg.max_per_round]
    extra = []
    for s in ranked:
        for t in _swaps(g, s):
            if t not in seen:
                seen.add(t)
                extra.append(t)
    scores.update(zip(extra, scorer.score(x, extra)))
    hits = [(s, float(v)) for s, v in scores.items() if v > cfg.tol_viol]
    hits.sort(key=lambda item: (-item[1], item[0]))
    return hits


def cutting_plane_search(g: Graph, formulation: str, cfg: SearchConfig,
                         settings: SolverSettings | None = None,
                         alpha: int | str | None = None,
                         initial: Sequence[Sequence[int]] = ()) -> tuple[EscSelection, BoundReport]:
    """Alternate solving and adding the most violated order-k constraints."""
    formulation = _check_formulation(formulation)
    if cfg.k > g.n:
        raise ValueError(f"subset order {cfg.k} exceeds n={g.n}")
    rng = np.random.default_rng(cfg.seed)
    scaled = formulation == SESH
    chosen = [subset(s, g.n) for s in initial]
    trajectory = []
    t0 = time.perf_counter()

    def run():
        p = build_problem(g, formulation, chosen, cfg.mode)
        return p, solve(p, settings)

    p, sol = run()
    trajectory.append(TrajectoryPoint(0, formulation, sol.dual_objective, 0, len(chosen), sol.seconds))
    note = f"stopped after {cfg.rounds} rounds"
    for r in range(1, cfg.rounds + 1):
        if not sol.ok:
            note = f"solver status {sol.status} in round {r - 1}"
            break
        x = solution_matrix(p, sol)
        hits = find_violated(g, x, cfg.k, set(chosen), scaled, cfg, rng)
        if not hits:
            note = f"no violated subgraph of order {cfg.k} in round {r}"
            break
        added = [s for s, _ in hits[:cfg.max_per_round]]
        chosen.extend(added)
        p, sol = run()
        trajectory.append(TrajectoryPoint(r, formulation, sol.dual_objective, len(added),
                                          len(chosen), sol.seconds))
    sel = EscSelection(list(chosen), mode="lambda" if scaled else cfg.mode, scaled=scaled)
    rep = BoundReport(formulation, g.name, g.n, g.m, _orders(chosen), sol.dual_objective,
                      sol.objective, sol.status, sol.iterations,
                      time.perf_counter() - t0, _alpha(g, alpha), list(chosen), trajectory,
                      note, p, sol)
    return sel, rep


# --- formulation comparison -------------------------------------------------------

@dataclass
class Comparison:
    graph: str
    orders: dict[int, int]
    esh: float
    cesh: float
    sesh: float
    statuses: tuple[str, str, str]
    violations: list[str]

    @property
    def ok(self) -> bool:
        return not self.violations


def compare_formulations(g: Graph, subsets: Sequence[Sequence[int]],
                         settings: SolverSettings | None = None,
                         tol_order: float = 1e-6, tol_equal: float = 1e-5) -> Comparison:
    reps = [compute_bound(g, f, subsets, settings=settings) for f in FORMULATIONS]
    e, c, s = (r.bound for r in reps)
    bad = []
    if e > c + tol_order:
        bad.append(f"ESH bound {e:.9f} exceeds CESH bound {c:.9f} by more than {tol_order:g}")
    if abs(s - c) > tol_equal:
        bad.append(f"SESH bound {s:.9f} differs from CESH bound {c:.9f} by more than {tol_equal:g}")
    for r in reps:
        if not r.ok:
            bad.append(f"{r.formulation} solve ended with status {r.status}")
    return Comparison(g.name, reps[0].orders, e, c, s, tuple(r.status for r in reps), bad)


# --- the constructive step from ESH to CESH ---------------------------------------

@dataclass
class TransformCheck:
    gamma: float
    objective: float
    esh_value: float
    primal_res: float
    min_eig: float
    min_weight: float

    def passes(self, tol_feas: float = 1e-6, tol_obj: float = 1e-5) -> bool:
        return (self.primal_res <= tol_feas and self.min_eig >= -tol_feas
                and self.min_weight >= -tol_feas and self.objective >= self.esh_value - tol_obj)


def esh_to_cesh_point(g: Graph, esh: BoundReport) -> tuple[SdpProblem, list[np.ndarray], float]:
    """Rescale an ESH solution into a CESH candidate with matching weights.

    ``X' = X / gamma`` with ``gamma = trace(X)``; each subset's weights are
    divided by ``gamma`` and the missing mass ``(gamma - 1) / gamma`` goes to
    the empty stable set, whose matrix is zero.
    """
    if esh.problem is None or esh.solution is None or esh.formulation != ESH:
        raise ValueError("need a solved ESH report")
    p_esh, sol = esh.problem, esh.solution
    x = solution_matrix(p_esh, sol)
    gamma = float(np.trace(x))
    if gamma < 1.0 - 1e-9:
        raise HierarchyError(f"trace {gamma} below 1; the shift needs gamma >= 1")
    lams = esc_lambdas(p_esh, sol)
    target = build_problem(g, CESH, esh.subsets)
    weights = np.zeros(target.blocks[-1][1]) if len(target.blocks) > 1 else None
    for rec in target.escs:
        lam = lams[rec.subset] / gamma
        lam[0] += (gamma - 1.0) / gamma  # the first member is the empty set
        weights[rec.var_start:rec.var_stop] = lam
    blocks = [x / gamma] + ([weights] if weights is not None else [])
    return target, blocks, gamma


def check_transform(g: Graph, esh: BoundReport) -> TransformCheck:
    target, blocks, gamma = esh_to_cesh_point(g, esh)
    res = primal_residuals(target, blocks)
    return TransformCheck(gamma, res.primal_objective, esh.bound, res.primal_res,
                          min(res.min_eig), float(blocks[1].min()) if len(blocks) > 1 else 0.0)
