import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from esh import graphs
from esh.graphs import Graph, GraphFormatError
from strategies import small_graphs


def test_parse_small_file():
    g = graphs.parse_dimacs("p edge 3 2\ne 1 2\ne 2 3")
    assert g.n == 3 and g.edges == {(1, 2), (2, 3)}


@pytest.mark.parametrize("text, msg", [
    ("p edge 2 1\ne 2 2", "self-loop"),
    ("e 1 2", "before problem"),
    ("p edge 3 1\ne 1 4", "outside"),
    ("p edge x 1", "malformed"),
    ("c nothing", "missing problem"),
    ("p edge 3 1\np edge 3 1", "second problem"),
])
def test_parse_rejects(text, msg):
    with pytest.raises(GraphFormatError, match=msg):
        graphs.parse_dimacs(text)


def test_edge_count_mismatch_only_warns(caplog):
    g = graphs.parse_dimacs("p edge 3 5\ne 1 2\ne 2 1")
    assert g.m == 1
    assert "declares m=5" in caplog.text


def test_hamming_fixture(data_dir):
    g = graphs.read_dimacs(data_dir / "hamming6-4.clq")
    assert (g.n, g.m) == (64, 704)
    co = graphs.complement(g)
    assert co.m == 1312
    assert co.edges == graphs.hamming_complement_6_4().edges


def test_hamming_complement_instance():
    g = graphs.hamming_complement_6_4()
    assert g.has_edge(1, 2)  # 000000 ~ 000001
    assert not g.has_edge(1, 64)  # 000000 vs 111111
    by_dist = {d: sum(bin((i - 1) ^ (j - 1)).count("1") == d for i, j in g.edges) for d in (1, 2, 3)}
    assert by_dist == {d: 64 * math.comb(6, d) // 2 for d in (1, 2, 3)} == {1: 192, 2: 480, 3: 640}


def test_complement_of_triangle_is_empty():
    assert graphs.complement(graphs.complete_graph(3)).m == 0


def test_induced_subgraph_examples():
    p4 = graphs.path_graph(4)
    h = graphs.induced_subgraph(p4, [1, 3, 4])
    assert h.n == 3 and h.edges == {(2, 3)}
    h = graphs.induced_subgraph(graphs.cycle_graph(5), [1, 2, 3])
    assert h.edges == {(1, 2), (2, 3)}
    assert graphs.induced_subgraph(p4, [1, 2, 3, 4]).edges == p4.edges
    with pytest.raises(ValueError):
        graphs.induced_subgraph(p4, [0, 1])


@given(small_graphs(max_n=10))
def test_complement_is_involution(g):
    co = graphs.complement(g)
    assert co.m == g.n * (g.n - 1) // 2 - g.m
    assert graphs.complement(co).edges == g.edges


@given(small_graphs(min_n=3, max_n=10), st.data())
def test_nested_restriction(g, data):
    outer = data.draw(st.sets(st.integers(1, g.n), min_size=2))
    inner = data.draw(st.sets(st.sampled_from(sorted(outer)), min_size=1))
    pos = {v: a + 1 for a, v in enumerate(sorted(outer))}
    two_step = graphs.induced_subgraph(graphs.induced_subgraph(g, outer), [pos[v] for v in inner])
    assert two_step.edges == graphs.induced_subgraph(g, inner).edges


@given(small_graphs(max_n=10))
def test_round_trips(g):
    assert graphs.parse_dimacs(graphs.to_dimacs(g)).edges == g.edges
    assert graphs.from_json(graphs.to_json(g)) == g


def test_erdos_renyi_extremes_and_reproducibility():
    assert graphs.erdos_renyi(5, 0.0, 1).m == 0
    assert graphs.erdos_renyi(5, 1.0, 1).m == 10
    assert graphs.erdos_renyi(30, 0.3, 9).edges == graphs.erdos_renyi(30, 0.3, 9).edges
    with pytest.raises(ValueError):
        graphs.erdos_renyi(5, 1.5, 1)


def test_erdos_renyi_edge_count_distribution():
    pairs = math.comb(60, 2)
    counts = np.array([graphs.erdos_renyi(60, 0.25, s).m for s in range(100)])
    sd = math.sqrt(pairs * 0.25 * 0.75)
    assert abs(counts.mean() - 0.25 * pairs) < 3 * sd / math.sqrt(100)


def test_splitmix_reference_values():
    # first outputs for seed 0 as published with the generator
    it = graphs.splitmix64(0)
    assert [next(it) for _ in range(2)] == [0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4]


@pytest.mark.parametrize("q", [5, 13, 17, 29, 61])
def test_paley_regular(q):
    g = graphs.paley(q)
    squares = {(a * a) % q for a in range(1, q)}
    assert set(g.degrees()) == {len(squares)} == {(q - 1) // 2}
    assert g.m == q * (q - 1) // 4


def test_paley_small_cases():
    assert graphs.paley(5).edges == graphs.cycle_graph(5).edges
    assert graphs.paley(61).m == 915
    for bad in (7, 9, 15):
        with pytest.raises(ValueError):
            graphs.paley(bad)


def test_circulants():
    assert graphs.circulant(5, [1]).edges == graphs.cycle_graph(5).edges
    assert graphs.circulant(6, [1, 2, 3]).m == 15
    c47 = graphs.circulant(47, range(1, 7))
    assert set(c47.degrees()) == {12} and c47.m == 282
    with pytest.raises(ValueError):
        graphs.circulant(6, [4])


def test_graph_rejects_bad_edges():
    with pytest.raises(GraphFormatError):
        Graph(3, frozenset({(1, 1)}))
    with pytest.raises(GraphFormatError):
        Graph(3, frozenset({(1, 4)}))
    assert Graph(3, frozenset({(2, 1)})).edges == {(1, 2)}
