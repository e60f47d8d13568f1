from itertools import combinations

import pytest
from hypothesis import given, settings, strategies as st

from matchstat.graph import (
    Graph,
    Matching,
    SeedSpec,
    complete_graph,
    edge_from_index,
    edge_index,
    format_graph,
    gnm_sample,
    gnp_sample,
    pair_profile,
    parse_graph,
)


@pytest.mark.parametrize("n,edges", [(1, 0), (4, 6), (10, 45)])
def test_complete_graph_edge_count(n, edges):
    assert complete_graph(n).num_edges == edges


def test_edge_index_bijection():
    for n in range(2, 65):
        seen = set()
        for u, v in combinations(range(n), 2):
            e = edge_index(v, u, n)
            assert edge_from_index(e, n) == (u, v)
            seen.add(e)
        assert seen == set(range(n * (n - 1) // 2))


def test_edge_index_rejects_loops_and_range():
    with pytest.raises(ValueError):
        edge_index(2, 2, 5)
    with pytest.raises(ValueError):
        edge_index(0, 5, 5)


def test_graph_rejects_duplicate_edges():
    with pytest.raises(ValueError):
        Graph.from_edges(4, [(0, 1), (1, 0)])


def test_matching_canonical_form():
    assert Matching.of(["23", "10"]) == Matching.of([(0, 1), (2, 3)])
    with pytest.raises(ValueError):
        Matching(((0, 1), (1, 2)))
    with pytest.raises(ValueError):
        Matching(((2, 3), (0, 1)))


@pytest.mark.parametrize(
    "a,b,n,expected",
    [
        (["01", "23"], ["01", "23"], 6, (2, 4, 0, 2)),
        (["01", "23"], ["01", "24"], 6, (1, 3, 2, 1)),
        (["01", "23"], ["45", "67"], 8, (0, 0, 8, 0)),
    ],
)
def test_pair_profile_examples(a, b, n, expected):
    prof = pair_profile(Matching.of(a), Matching.of(b), n)
    assert (prof.i, prof.n2, prof.n1, prof.n0) == expected
    assert prof.union_edge_count == 4 - prof.i


def test_pair_profile_rejects_bad_input():
    with pytest.raises(TypeError):
        pair_profile([(0, 1)], Matching.of(["01"]), 4)
    with pytest.raises(ValueError):
        pair_profile(Matching.of(["01"]), Matching.of(["01", "23"]), 4)


@st.composite
def matching_pairs(draw):
    n = draw(st.integers(4, 12))
    ell = draw(st.integers(1, n // 2))

    def one():
        perm = draw(st.permutations(range(n)))
        return Matching.of([(perm[2 * j], perm[2 * j + 1]) for j in range(ell)])

    return n, one(), one()


@given(matching_pairs())
def test_pair_profile_vertex_identities(data):
    n, M, M2 = data
    prof = pair_profile(M, M2, n)
    assert prof.n0 + prof.n1 + prof.n2 == n
    assert prof.n1 == 4 * M.size - 2 * prof.n2
    assert prof.n0 >= 0


def test_gnp_extremes():
    assert gnp_sample(7, 0.0, SeedSpec(3)).num_edges == 0
    assert gnp_sample(7, 1.0, SeedSpec(3)) == complete_graph(7)


def test_gnp_mean_edge_count():
    counts = [gnp_sample(100, 0.5, SeedSpec(11, t)).num_edges for t in range(2000)]
    mean = sum(counts) / len(counts)
    se = (4950 * 0.25 / len(counts)) ** 0.5
    assert abs(mean - 2475) < 3 * se


def test_gnm_extremes():
    assert gnm_sample(6, 0, SeedSpec(1)).num_edges == 0
    assert gnm_sample(6, 15, SeedSpec(1)) == complete_graph(6)
    with pytest.raises(ValueError):
        gnm_sample(6, 16, SeedSpec(1))


def test_gnm_uniform_over_two_edge_graphs():
    trials = 20000
    freq = {}
    for t in range(trials):
        g = gnm_sample(5, 2, SeedSpec(99, t))
        assert g.num_edges == 2
        freq[g.bits] = freq.get(g.bits, 0) + 1
    assert len(freq) == 45
    q = 1 / 45
    sd = (q * (1 - q) / trials) ** 0.5
    # 45 cells; 4 sigma keeps the family-wise false alarm rate small
    assert all(abs(c / trials - q) < 4 * sd for c in freq.values())


def test_samplers_reproducible():
    s = SeedSpec(2024, 5)
    assert gnp_sample(30, 0.3, s) == gnp_sample(30, 0.3, s)
    assert gnm_sample(30, 100, s) == gnm_sample(30, 100, s)
    assert gnp_sample(30, 0.3, s) != gnp_sample(30, 0.3, SeedSpec(2024, 6))


@settings(max_examples=50)
@given(st.integers(1, 12), st.integers(0, 2**32), st.floats(0, 1))
def test_graph_file_round_trip(n, seed, p):
    g = gnp_sample(n, p, SeedSpec(seed))
    assert parse_graph(format_graph(g)) == g


def test_parse_graph_checks_header():
    with pytest.raises(ValueError):
        parse_graph("4 2\n0 1\n")
