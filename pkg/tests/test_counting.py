import pytest
from hypothesis import given, settings, strategies as st

from matchstat import CapExceeded
from matchstat.counting import (
    MemoCache,
    brute_force_counts,
    count_l_matchings_sparse,
    count_matchings,
    delta_r,
    double_factorial,
    matchings_complete,
)
from matchstat.graph import Graph, SeedSpec, complete_graph, cycle_graph, empty_graph, gnp_sample


@pytest.mark.parametrize("m,value", [(5, 15), (6, 48), (-1, 1), (0, 1), (1, 1)])
def test_double_factorial(m, value):
    assert double_factorial(m) == value


def test_double_factorial_rejects_below_minus_one():
    with pytest.raises(ValueError):
        double_factorial(-2)


@pytest.mark.parametrize("n,ell,value", [(6, 3, 15), (4, 2, 3), (8, 2, 210)])
def test_matchings_complete(n, ell, value):
    assert matchings_complete(n, ell) == value


def test_matchings_complete_range():
    with pytest.raises(ValueError):
        matchings_complete(5, 3)


def test_delta_r():
    assert delta_r(8, 2, 1) == 15
    assert delta_r(9, 3, 3) == 1
    assert delta_r(9, 3, 0) == matchings_complete(9, 3)
    with pytest.raises(ValueError):
        delta_r(8, 2, 3)


def test_small_graphs():
    assert count_matchings(cycle_graph(4)).as_list() == [1, 4, 2]
    assert count_matchings(empty_graph(5)).as_list() == [1, 0, 0]
    k6 = count_matchings(complete_graph(6)).as_list()
    assert k6 == [1, 15, 45, 15] == brute_force_counts(complete_graph(6))


def test_count_vector_beyond_half_is_zero():
    cv = count_matchings(cycle_graph(5))
    assert cv[3] == 0 and cv[0] == 1 and cv[1] == 5


def test_complete_graph_counts():
    for n in range(1, 15):
        cv = count_matchings(complete_graph(n))
        assert all(cv[ell] == matchings_complete(n, ell) for ell in range(n // 2 + 1))


def test_cap():
    with pytest.raises(CapExceeded):
        count_matchings(empty_graph(29))
    assert count_matchings(empty_graph(29), cap=29)[0] == 1


def test_sparse_examples():
    g = Graph.from_edges(4, [(0, 1), (2, 3)])
    assert count_l_matchings_sparse(g, 2) == 1
    assert count_l_matchings_sparse(g, 1) == 2
    assert count_l_matchings_sparse(g, 0) == 1
    with pytest.raises(ValueError):
        count_l_matchings_sparse(g, 5)


def test_sparse_matches_polynomial_on_g12():
    for t in range(50):
        g = gnp_sample(12, 0.5, SeedSpec(77, t))
        assert count_l_matchings_sparse(g, 3) == count_matchings(g)[3]


graphs = st.builds(
    lambda n, p, seed: gnp_sample(n, p, SeedSpec(seed)),
    st.integers(1, 10),
    st.sampled_from([0.2, 0.5, 0.8]),
    st.integers(0, 2**32),
)


@settings(max_examples=60, deadline=None)
@given(graphs)
def test_kernel_agreement(g):
    brute = brute_force_counts(g)
    assert count_matchings(g).as_list() == brute
    for ell in range(min(4, g.n // 2) + 1):
        assert count_l_matchings_sparse(g, ell) == brute[ell]


@settings(max_examples=60, deadline=None)
@given(graphs, graphs)
def test_disjoint_union_is_convolution(a, b):
    ca, cb = count_matchings(a).as_list(), count_matchings(b).as_list()
    conv = [0] * (len(ca) + len(cb) - 1)
    for i, x in enumerate(ca):
        for j, y in enumerate(cb):
            conv[i + j] += x * y
    got = count_matchings(a.disjoint_union(b)).as_list()
    assert got == (conv + [0] * len(got))[: len(got)]


@settings(max_examples=60, deadline=None)
@given(graphs, st.data())
def test_edge_recursion(g, data):
    edges = g.edges()
    if not edges:
        return
    u, v = data.draw(st.sampled_from(edges))
    full = count_matchings(g)
    without = count_matchings(g.remove_edge(u, v))
    contracted = count_matchings(g.remove_vertices(u, v))
    for k in range(1, g.n // 2 + 1):
        assert full[k] == without[k] + contracted[k - 1]


def test_memo_cache_reuse_is_consistent():
    g = gnp_sample(20, 0.3, SeedSpec(5))
    cache = MemoCache()
    first = count_matchings(g, cache=cache)
    assert cache.misses > 0
    again = count_matchings(g, cache=cache)
    assert first == again and cache.hits > 0
