import numpy as np
import pytest

from netengage.graphs import (
    Graph,
    ResourceAssignment,
    assign_resources,
    format_edge_list,
    format_resources,
    gen_erdos_renyi,
    gen_grid,
    gen_line,
    gen_ring,
    gen_star,
    gen_wheel,
    induced_subgraph,
    parse_edge_list,
    parse_resources,
)


def test_erdos_renyi_is_reproducible_per_seed():
    a = gen_erdos_renyi(200, 0.05, 3)
    b = gen_erdos_renyi(200, 0.05, 3)
    c = gen_erdos_renyi(200, 0.05, 4)
    assert a.edges() == b.edges()
    assert a.edges() != c.edges()


def test_erdos_renyi_mean_degree():
    g = gen_erdos_renyi(1000, 0.01, 1)
    assert abs(g.degrees.mean() - 9.99) < 0.5


@pytest.mark.parametrize("p", [0.0, 1.0])
def test_erdos_renyi_extremes(p):
    g = gen_erdos_renyi(12, p, 0)
    assert g.n_edges == (0 if p == 0 else 12 * 11 // 2)


def test_generator_argument_checks():
    with pytest.raises(ValueError):
        gen_erdos_renyi(10, 1.5, 0)
    with pytest.raises(ValueError):
        gen_ring(2)
    with pytest.raises(ValueError):
        gen_wheel(3)
    with pytest.raises(ValueError):
        gen_line(1)


def test_ring_wheel_grid_degrees():
    assert set(gen_ring(7).degrees.tolist()) == {2}
    w = gen_wheel(20)
    assert w.degree(0) == 19 and all(w.degree(j) == 3 for j in range(1, 20))
    grid = gen_grid(5)
    assert grid.n == 25 and grid.n_edges == 2 * 5 * 4
    assert sorted(set(grid.degrees.tolist())) == [2, 3, 4]
    assert gen_line(4).edges() == [(0, 1), (1, 2), (2, 3)]
    assert gen_star(3).degree(0) == 3


def test_graph_rejects_self_loops():
    with pytest.raises(ValueError):
        Graph.from_edges(3, [(0, 0)])


def test_edge_list_round_trip():
    g = gen_erdos_renyi(50, 0.1, 9)
    assert parse_edge_list(format_edge_list(g)).edges() == g.edges()


def test_edge_list_header_mismatch():
    with pytest.raises(ValueError):
        parse_edge_list("3 2\n0 1\n")


def test_resource_assignment_shape_and_round_trip():
    g = gen_erdos_renyi(100, 0.05, 2)
    lab = assign_resources(g, 10, 3, 5)
    assert all(len(x) == 3 and max(x) < 10 for x in lab.labels)
    back = parse_resources(format_resources(lab), 10)
    assert back.labels == lab.labels


def test_resource_assignment_is_uniform_over_resources():
    g = gen_erdos_renyi(4000, 0.0, 0)
    lab = assign_resources(g, 8, 2, 11)
    counts = np.bincount([x for s in lab.labels for x in s], minlength=8)
    assert np.all(np.abs(counts / counts.sum() - 1 / 8) < 0.01)


def test_resource_assignment_validation():
    with pytest.raises(ValueError):
        ResourceAssignment(3, 2, (frozenset({0, 5}),))
    with pytest.raises(ValueError):
        assign_resources(gen_ring(4), 2, 3, 0)


def test_local_pool_unions_own_and_neighbor_labels():
    g = gen_line(3)
    lab = ResourceAssignment(4, 1, (frozenset({0}), frozenset({1}), frozenset({3})))
    assert lab.local_pool(g, 0) == {0, 1}
    assert lab.local_pool(g, 1) == {0, 1, 3}


def test_induced_subgraph_relabels():
    g = gen_ring(6)
    h, old = induced_subgraph(g, [1, 2, 3, 5])
    assert old == [1, 2, 3, 5]
    assert h.edges() == [(0, 1), (1, 2)]
