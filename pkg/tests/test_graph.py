import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qdopt.graph import (
    Digraph,
    GraphFormatError,
    NotStronglyConnected,
    complete_digraph,
    diameter,
    directed_cycle,
    format_edge_list,
    is_strongly_connected,
    parse_edge_list,
    random_strongly_connected,
    read_edge_list,
    write_edge_list,
)


def to_nx(g: Digraph) -> nx.DiGraph:
    h = nx.DiGraph()
    h.add_nodes_from(range(g.n))
    # stored pairs are (receiver, sender); networkx wants sender -> receiver
    h.add_edges_from((s, r) for r, s in g.edges)
    return h


def test_cycle_is_strongly_connected():
    assert is_strongly_connected(directed_cycle(3))


def test_single_edge_pair_not_strongly_connected():
    g = Digraph(2, frozenset({(1, 0)}))
    assert not is_strongly_connected(g)
    with pytest.raises(NotStronglyConnected):
        diameter(g)


def test_complete_digraph():
    assert is_strongly_connected(complete_digraph(5))
    assert diameter(complete_digraph(20)) == 1


def test_cycle_diameter():
    assert diameter(directed_cycle(6)) == 5


def test_four_node_ring_diameter():
    # 1->2->3->4->1, relabelled 0..3
    g = Digraph.from_senders(4, [(0, 1), (1, 2), (2, 3), (3, 0)])
    assert g.diameter == 3


def test_single_node():
    g = random_strongly_connected(1, 0.0, seed=7)
    assert g.n == 1 and g.num_edges == 0
    assert is_strongly_connected(g)
    assert g.diameter == 0


def test_p_zero_gives_cycle():
    for seed in range(5):
        g = random_strongly_connected(20, 0.0, seed=seed)
        assert g.num_edges == 20
        assert g.diameter == 19


def test_generated_is_strongly_connected():
    assert is_strongly_connected(random_strongly_connected(20, 0.3, seed=42))


def test_self_loops_dropped():
    g = Digraph(2, frozenset({(0, 0), (0, 1), (1, 0)}))
    assert g.edges == frozenset({(0, 1), (1, 0)})
    assert g.out_degree(0) == 1


def test_bad_edges_rejected():
    with pytest.raises(ValueError):
        Digraph(2, frozenset({(0, 5)}))
    with pytest.raises(ValueError):
        Digraph(0)
    with pytest.raises(ValueError):
        random_strongly_connected(3, 1.5)


@settings(max_examples=150, deadline=None)
@given(n=st.integers(1, 14), p=st.floats(0, 1), seed=st.integers(0, 2**32 - 1))
def test_generator_against_networkx(n, p, seed):
    g = random_strongly_connected(n, p, seed=seed)
    h = to_nx(g)
    assert nx.is_strongly_connected(h)
    assert is_strongly_connected(g)
    if n > 1:
        assert g.diameter == nx.diameter(h)
        assert g.diameter <= n - 1
    rev = g.reversed()
    assert is_strongly_connected(rev)
    # same seed, same edge set
    again = random_strongly_connected(n, p, seed=seed)
    assert np.array_equal(g.adjacency(), again.adjacency())


@settings(max_examples=150, deadline=None)
@given(
    n=st.integers(1, 8),
    pairs=st.sets(st.tuples(st.integers(0, 7), st.integers(0, 7)), max_size=30),
)
def test_connectivity_against_networkx(n, pairs):
    pairs = {(r, s) for r, s in pairs if r < n and s < n}
    g = Digraph(n, frozenset(pairs))
    h = to_nx(g)
    assert is_strongly_connected(g) == nx.is_strongly_connected(h)
    if nx.is_strongly_connected(h) and n > 1:
        assert g.diameter == nx.diameter(h)
    # neighbour lists are transposes of each other
    for i in range(n):
        for j in g.out_neighbors[i]:
            assert i in g.in_neighbors[j]
        for j in g.in_neighbors[i]:
            assert i in g.out_neighbors[j]


def test_edge_list_round_trip(tmp_path):
    g = random_strongly_connected(9, 0.25, seed=3)
    path = tmp_path / "g.txt"
    write_edge_list(g, path)
    assert read_edge_list(path) == g
    assert parse_edge_list(format_edge_list(g)) == g


def test_edge_list_parsing():
    g = parse_edge_list("# ring\nn=3\n1 0  # 0 -> 1\n2 1\n0 2\n")
    assert g == directed_cycle(3)


@pytest.mark.parametrize(
    "text",
    ["0 1\n", "n=2\nn=2\n", "n=x\n", "n=2\n0 1 2\n", "n=2\n0 a\n", "n=2\n0 9\n", ""],
)
def test_edge_list_errors(text):
    with pytest.raises(GraphFormatError):
        parse_edge_list(text)
