import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from topoguide.errors import DimensionError, FormatError, InputError
from topoguide.graph import (Graph, GraphDistribution, apply_removals, edit_distance, format_edgelist,
                         parse_edgelist, read_edgelist, write_edgelist)

from conftest import graphs


def triangle():
    return Graph.from_edges(3, [(0, 1), (1, 2), (0, 2)])


def path3():
    return Graph.from_edges(3, [(0, 1), (1, 2)])


def test_edit_distance_identity():
    g = triangle()
    assert edit_distance(g, g) == 0


def test_edit_distance_single_added_edge():
    assert edit_distance(path3(), triangle()) == 1


def test_edit_distance_empty_vs_triangle():
    # the three pairs (0,1), (0,2), (1,2) all differ
    assert edit_distance(Graph.empty(3), triangle()) == 3


def test_edit_distance_counts_node_labels():
    g = triangle()
    h = g.with_classes(node_class=np.array([0, 1, 0]))
    assert edit_distance(g, h) == 1


def test_edit_distance_size_mismatch():
    with pytest.raises(DimensionError):
        edit_distance(Graph.empty(3), Graph.empty(4))
    with pytest.raises(DimensionError):
        edit_distance(Graph.empty(3, b=2), Graph.empty(3, b=3))


def test_removal_of_one_triangle_edge_gives_path():
    assert apply_removals(triangle(), edges=[(0, 2)]) == path3()


def test_empty_removal_is_identity():
    g = triangle()
    assert apply_removals(g) == g


def test_four_cycle_opposite_edges():
    c4 = Graph.from_edges(4, [(0, 1), (1, 2), (2, 3), (0, 3)])
    h = apply_removals(c4, edges=[(0, 1), (2, 3)])
    assert sorted(h.edges()) == [(0, 3, 1), (1, 2, 1)]
    assert edit_distance(c4, h) == 2


def test_node_removal_masks_and_clears():
    g = triangle()
    h = apply_removals(g, nodes=[1])
    assert h.node_class[1] == g.inactive_class == 1
    assert h.edges() == [(0, 2, 1)]
    # one label change plus two cleared edges
    assert edit_distance(g, h) == 3


def test_removal_out_of_range():
    with pytest.raises(IndexError):
        apply_removals(triangle(), nodes=[5])
    with pytest.raises(IndexError):
        apply_removals(triangle(), edges=[(0, 7)])


def test_constructor_rejects_asymmetric_and_self_loops():
    adj = np.array([[0, 1], [0, 0]])
    with pytest.raises(DimensionError):
        Graph.from_matrix(np.zeros(2, int), adj)
    with pytest.raises((DimensionError, InputError)):
        Graph.from_matrix(np.zeros(2, int), np.array([[1, 0], [0, 0]]))
    with pytest.raises((DimensionError, InputError)):
        Graph.from_edges(3, [(0, 1, 2)])  # class 2 with b = 2


def test_graph_is_immutable():
    g = triangle()
    with pytest.raises(ValueError):
        g.pair_class[0] = 0


def test_distribution_validation_and_sampling(rng):
    n = 3
    node = np.full((n, 2), 0.5)
    edge = np.full((n, n, 2), 0.5)
    edge[np.arange(n), np.arange(n)] = [1.0, 0.0]
    d = GraphDistribution(node, edge)
    g = d.sample(rng)
    assert g.n == 3 and np.array_equal(g.edge_class, g.edge_class.T)
    bad = edge.copy()
    bad[0, 1] = [0.2, 0.8]
    with pytest.raises(DimensionError):
        GraphDistribution(node, bad)
    with pytest.raises((DimensionError, InputError)):
        GraphDistribution(np.full((n, 2), 0.6), edge)


def test_one_hot_argmax_round_trip():
    g = triangle()
    assert GraphDistribution.one_hot(g).argmax() == g


@settings(max_examples=60, deadline=None)
@given(graphs(), graphs())
def test_edit_distance_symmetric(g1, g2):
    if g1.n != g2.n:
        return
    assert edit_distance(g1, g2) == edit_distance(g2, g1)
    assert (edit_distance(g1, g2) == 0) == (g1 == g2)


@settings(max_examples=60, deadline=None)
@given(graphs(n_min=2), st.data())
def test_edit_distance_of_effective_edge_removals(g, data):
    present = [(u, v) for u, v, _ in g.edges()]
    n = g.n
    all_pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    chosen = data.draw(st.lists(st.sampled_from(all_pairs), max_size=6)) if all_pairs else []
    h = apply_removals(g, edges=chosen)
    effective = {p for p in chosen if p in present}
    assert edit_distance(g, h) == len(effective)
    # idempotent on already-removed elements
    assert apply_removals(h, edges=chosen) == h


@settings(max_examples=60, deadline=None)
@given(graphs(inactive=True), st.data())
def test_node_removal_edit_count(g, data):
    v = data.draw(st.integers(0, g.n - 1))
    h = apply_removals(g, nodes=[v])
    label = int(g.node_class[v] != g.inactive_class)
    cleared = sum(1 for u, w, _ in g.edges() if v in (u, w))
    assert edit_distance(g, h) == label + cleared
    assert np.array_equal(h.edge_class, h.edge_class.T)


@settings(max_examples=40, deadline=None)
@given(st.lists(graphs(inactive=True), min_size=1, max_size=4))
def test_edgelist_round_trip(gs):
    assert parse_edgelist(format_edgelist(gs)) == gs


def test_edgelist_format_layout():
    text = format_edgelist([path3()])
    lines = text.strip().splitlines()
    assert lines[0] == "3 2 2"
    assert lines[1:4] == ["0 0", "1 0", "2 0"]
    assert lines[4:] == ["0 1 1", "1 2 1"]


def test_edgelist_file_round_trip(tmp_path):
    gs = [triangle(), path3(), Graph.empty(5)]
    p = tmp_path / "g.txt"
    write_edgelist(p, gs)
    assert read_edgelist(p) == gs


def test_edgelist_parse_errors_report_line():
    with pytest.raises(FormatError) as ei:
        parse_edgelist("3 2 2\n0 0\n1 0\n2 0\n0 9 1\n")
    assert ei.value.line == 5
    with pytest.raises(FormatError):
        parse_edgelist("3 2\n")


def test_permute_relabels():
    g = path3()
    h = g.permute([2, 0, 1])
    assert h.num_edges == 2
    assert sorted(h.adjacency.sum(0)) == [1, 1, 2]
