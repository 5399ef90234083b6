import math

import numpy as np
import pytest
import scipy.optimize
import scipy.sparse as sp

from esh import graphs
from esh.hierarchy import build_problem
from esh.model import NONNEG, PSD, SdpProblem, build_theta_n, build_theta_nplus1
from esh.solver import (SolverError, SolverSettings, check_solution, independent_rows,
                        primal_residuals, solve)
from oracle import solve_with_cvxpy
from suites import graph_subset_pairs

TIGHT = dict(tol_gap_abs=1e-9, tol_gap_rel=1e-9, tol_feas=1e-9)


@pytest.mark.parametrize("p, want, tol", [
    (build_theta_n(graphs.empty_graph(5)), 5.0, 1e-6),
    (build_theta_n(graphs.complete_graph(5)), 1.0, 1e-6),
    (build_theta_nplus1(graphs.cycle_graph(5)), math.sqrt(5), 1e-4),
    (build_theta_n(graphs.paley(61)), 7.8102, 1e-3),
])
def test_known_values(p, want, tol):
    sol = solve(p)
    assert sol.ok and abs(sol.dual_objective - want) <= tol


def _assert_contract(p, sol, s=SolverSettings()):
    assert sol.ok
    assert sol.gap <= s.tol_gap
    assert sol.primal_res <= s.tol_feas and sol.dual_res <= s.tol_feas
    for (kind, _), v in zip(p.blocks, sol.primal):
        if kind == PSD:
            assert np.linalg.eigvalsh(v)[0] >= -1e-8 * (1 + np.linalg.norm(v))
        else:
            assert v.min(initial=0) >= -1e-9


@pytest.mark.parametrize("idx", range(0, 50, 6))
@pytest.mark.parametrize("form", ["ESH", "CESH", "SESH"])
def test_against_reference_solver(idx, form):
    g, subs = graph_subset_pairs()[idx]
    p = build_problem(g, form, subs)
    sol = solve(p)
    _assert_contract(p, sol)
    assert abs(sol.dual_objective - solve_with_cvxpy(p, **TIGHT)) <= 1e-6


def test_facet_mode_against_reference():
    g, subs = graph_subset_pairs()[3]
    p = build_problem(g, "ESH", subs, mode="facets")
    assert abs(solve(p).dual_objective - solve_with_cvxpy(p, **TIGHT)) <= 1e-6


def test_linear_program_matches_linprog():
    rng = np.random.default_rng(0)
    a = rng.uniform(0.1, 1, size=(4, 9))
    x0 = rng.uniform(0.5, 1, size=9)
    b = a @ x0
    c = rng.normal(size=9)
    p = SdpProblem(blocks=[(NONNEG, 9)])
    for i in range(4):
        p.add_constraint([(0, j, j, a[i, j]) for j in range(9)], b[i])
    p.objective = [(0, j, j, c[j]) for j in range(9)]
    ref = scipy.optimize.linprog(-c, A_eq=a, b_eq=b, bounds=(0, None), method="highs")
    sol = solve(p)
    assert sol.ok and abs(sol.dual_objective + ref.fun) <= 1e-6


def test_weak_duality_on_feasible_iterates():
    g, subs = graph_subset_pairs()[10]
    sol = solve(build_problem(g, "CESH", subs))
    feasible = [h for h in sol.history if h["primal_res"] <= 1e-8 and h["dual_res"] <= 1e-8]
    assert feasible
    for h in feasible:
        assert h["pobj"] <= h["dobj"] + 1e-6
    assert len(sol.log_lines()) == len(sol.history) + 1


def test_deterministic():
    g, subs = graph_subset_pairs()[5]
    p = build_problem(g, "ESH", subs)
    s1, s2 = solve(p), solve(p)
    assert s1.dual_objective == s2.dual_objective and s1.iterations == s2.iterations
    for u, v in zip(s1.primal, s2.primal):
        np.testing.assert_array_equal(u, v)


def test_check_solution_feasible_point_and_perturbation():
    g = graphs.erdos_renyi(8, 0.4, 1)
    p = build_theta_n(g)
    x = np.eye(8) / 8
    rep = primal_residuals(p, [x])
    assert rep.primal_res <= 1e-12 and not rep.violated
    i, j = g.sorted_edges()[0]
    y = x.copy()
    y[i - 1, j - 1] = y[j - 1, i - 1] = 1e-3
    bad = primal_residuals(p, [y])
    assert bad.violated == [1]  # the first edge constraint follows the trace row


def test_check_solution_certifies_optimum():
    p = build_theta_nplus1(graphs.cycle_graph(7))
    sol = solve(p)
    rep = check_solution(p, sol)
    assert rep.primal_res <= 1e-6 and rep.dual_res <= 1e-6
    assert abs(rep.dual_objective - sol.dual_objective) <= 1e-9
    assert abs(rep.complementarity) <= 1e-5
    assert min(rep.min_eig) >= -1e-8


def test_duplicate_rows():
    a = sp.csr_matrix(np.array([[1.0, 2, 0], [2, 4, 0], [0, 0, 1], [0, 0, 0]]))
    np.testing.assert_array_equal(independent_rows(a, np.array([1.0, 2, 3, 0])), [0, 2])
    with pytest.raises(SolverError):
        independent_rows(a, np.array([1.0, 3, 3, 0]))
    with pytest.raises(SolverError):
        independent_rows(a, np.array([1.0, 2, 3, 1]))


@pytest.mark.parametrize("kw", [dict(tol_gap=0), dict(tol_feas=-1), dict(step_frac=1.0),
                                dict(polish=0), dict(polish=2)])
def test_settings_validation(kw):
    with pytest.raises(ValueError):
        SolverSettings(**kw)


def test_iteration_cap_reports_status():
    sol = solve(build_theta_nplus1(graphs.cycle_graph(9)), SolverSettings(max_iter=3))
    assert sol.status == "max_iter" and sol.iterations == 3
