import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from esh import graphs
from esh.model import build_theta_n
from esh.solver import primal_residuals
from esh.stable_sets import (ResourceLimitError, alpha_bruteforce, alpha_exhaustive,
                             enumerate_stable_sets, maximum_stable_set,
                             scaled_stable_set_matrices, stable_set_matrices)
from strategies import small_graphs


def test_path_family():
    fam = enumerate_stable_sets(graphs.path_graph(3))
    assert sorted(map(tuple, fam.index_sets())) == [(), (1,), (1, 3), (2,), (3,)]
    assert fam.masks[0] == 0


def test_triangle_and_edgeless():
    assert enumerate_stable_sets(graphs.complete_graph(3)).t == 4
    for k in range(6):
        assert enumerate_stable_sets(graphs.empty_graph(k)).t == 2**k


def test_enumeration_cap():
    with pytest.raises(ResourceLimitError):
        enumerate_stable_sets(graphs.empty_graph(12), cap=100)


@pytest.mark.parametrize("g, a", [
    (graphs.cycle_graph(5), 2),
    (graphs.cycle_graph(7), 3),
    (graphs.hamming_complement_6_4(), 4),
    (graphs.complete_graph(6), 1),
    (graphs.empty_graph(9), 9),
    (graphs.empty_graph(0), 0),
])
def test_alpha_known(g, a):
    assert alpha_bruteforce(g) == a


def test_alpha_time_guard():
    with pytest.raises(ResourceLimitError):
        alpha_bruteforce(graphs.erdos_renyi(70, 0.1, 1), time_limit=0.0)


@given(small_graphs(max_n=12))
def test_alpha_matches_enumeration(g):
    size, members = maximum_stable_set(g)
    assert size == alpha_exhaustive(g) == alpha_bruteforce(g)
    assert len(members) == size
    assert not any(g.has_edge(i, j) for i, j in itertools.combinations(members, 2))


@pytest.mark.parametrize("seed", range(5))
def test_alpha_matches_enumeration_n20(seed):
    g = graphs.erdos_renyi(20, 0.3, seed)
    assert alpha_bruteforce(g) == alpha_exhaustive(g)


@given(small_graphs(min_n=2, max_n=9), st.data())
def test_restriction_coherence(g, data):
    members = sorted(data.draw(st.sets(st.integers(1, g.n), min_size=1)))
    outer = set(enumerate_stable_sets(g).masks)
    for local in enumerate_stable_sets(graphs.induced_subgraph(g, members)).index_sets():
        lifted = sum(1 << (members[v - 1] - 1) for v in local)
        assert lifted in outer


def test_matrix_examples():
    fam = enumerate_stable_sets(graphs.path_graph(3))
    mats = stable_set_matrices(fam)
    i13 = fam.index_sets().index([1, 3])
    np.testing.assert_array_equal(mats[i13], [[1, 0, 1], [0, 0, 0], [1, 0, 1]])
    np.testing.assert_array_equal(mats[0], np.zeros((3, 3)))
    sc = scaled_stable_set_matrices(fam)
    np.testing.assert_allclose(sc[i13], [[.5, 0, .5], [0, 0, 0], [.5, 0, .5]])
    np.testing.assert_array_equal(sc[0], np.zeros((3, 3)))


@given(small_graphs(max_n=7))
def test_matrix_properties(g):
    fam = enumerate_stable_sets(g)
    mats, sc = stable_set_matrices(fam), scaled_stable_set_matrices(fam)
    assert len(mats) == len(sc) == fam.t
    for s, m, q in zip(fam.members, mats, sc):
        np.testing.assert_array_equal(np.diag(m), s)
        assert np.trace(m) == s.sum()
        assert np.linalg.matrix_rank(m) <= 1
        assert np.linalg.eigvalsh(m)[0] >= -1e-12
        if s.any():
            assert abs(np.trace(q) - 1) < 1e-15


def test_scaled_maximum_stable_set_feasible_for_trace_model():
    g = graphs.cycle_graph(5)
    _, members = maximum_stable_set(g)
    s = np.zeros(5)
    s[np.array(members) - 1] = 1
    x = np.outer(s, s) / s.sum()
    rep = primal_residuals(build_theta_n(g), [x])
    assert rep.primal_res < 1e-14 and abs(rep.primal_objective - 2) < 1e-14
