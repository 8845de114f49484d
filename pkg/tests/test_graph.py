import numpy as np
import pytest

from citegrowth.graph import (CitationGraph, GraphError, GraphStats, Adjacency,
                              generate_synthetic_graph, load_graph, write_graph,
                              load_dot, ym_to_months, months_to_ym, parse_month,
                              format_month, as_undirected_adjacency)


def small_graph():
    edges = np.array([[1, 0], [2, 0], [2, 1], [3, 2]])
    times = np.array([300.0, 310.0, 320.0, 330.0])
    return CitationGraph(node_count=4, edges=edges, app_time=times,
                         labels=["a", "b", "c", "d"])


def test_month_conversions():
    assert ym_to_months(1960, 1) == 0
    assert ym_to_months(1960, 12) == 11
    assert ym_to_months(1985, 1) == 300
    assert months_to_ym(300) == (1985, 1)
    for m in [0, 5, 300, 551]:
        y, mo = months_to_ym(m)
        assert ym_to_months(y, mo) == m


def test_parse_format_month():
    assert parse_month("1985-01") == 300
    assert format_month(300) == "1985-01"
    with pytest.raises(ValueError):
        parse_month("1985/01")
    with pytest.raises(ValueError):
        parse_month("1985-13")


def test_validation_rejects_bad_edges():
    times = np.zeros(3)
    with pytest.raises(GraphError):
        CitationGraph(3, np.array([[0, 3]]), times, ["a", "b", "c"])
    with pytest.raises(GraphError):
        CitationGraph(3, np.array([[1, 1]]), times, ["a", "b", "c"])
    with pytest.raises(GraphError):
        CitationGraph(3, np.array([[0, 1]]), times, ["a", "a", "c"])


def test_duplicate_edges_collapse():
    g = CitationGraph(3, np.array([[1, 0], [1, 0], [2, 0]]), np.zeros(3),
                      ["a", "b", "c"])
    assert len(g.edges) == 2


def test_adjacency_undirected_symmetry():
    g = small_graph()
    adj = as_undirected_adjacency(g)
    for u in range(g.node_count):
        for v in adj.neighbors(u):
            assert u in adj.neighbors(v)
    assert adj.degree(0) == 2
    assert adj.has_edge(0, 1) and adj.has_edge(1, 0)
    assert not adj.has_edge(0, 3)


def test_adjacency_directed():
    g = small_graph()
    adj = Adjacency(g.edges, g.node_count, directed=True)
    assert list(adj.neighbors(2)) == [0, 1]
    assert list(adj.neighbors(0)) == []


def test_round_trip_edge_csv(tmp_path):
    g = small_graph()
    path = tmp_path / "g.csv"
    write_graph(g, str(path), "edge-csv")
    g2 = load_graph(str(path), "edge-csv")
    assert g2.node_count == g.node_count
    assert np.array_equal(g2.edges, g.edges)
    np.testing.assert_allclose(g2.app_time, g.app_time)
    assert g2.labels == g.labels


def test_round_trip_dot(tmp_path):
    g = small_graph()
    path = tmp_path / "g.dot"
    write_graph(g, str(path), "dot")
    g2 = load_graph(str(path), "dot")
    assert g2.node_count == g.node_count
    assert np.array_equal(g2.edges, g.edges)
    assert g2.labels == g.labels


def test_dot_parse_error_carries_line_number(tmp_path):
    path = tmp_path / "bad.dot"
    path.write_text('digraph g {\n"a" [time="1985-01"];\n"a" -> ;\n}\n')
    with pytest.raises(GraphError) as err:
        load_dot(str(path))
    assert ":3:" in str(err.value)


def test_dot_unknown_endpoint(tmp_path):
    path = tmp_path / "bad.dot"
    path.write_text('digraph g {\n"a" [time="1985-01"];\n"a" -> "zzz";\n}\n')
    with pytest.raises(GraphError):
        load_dot(str(path))


def test_synthetic_block_structure():
    g = generate_synthetic_graph(4, 50, 0.2, 0.005, seed=0)
    assert g.node_count == 200
    assert g.block is not None and len(g.block) == 200
    same = diff = 0
    for a, b in g.edges:
        if g.block[a] == g.block[b]:
            same += 1
        else:
            diff += 1
    # expected within-block edges: 4 * C(50,2) * 0.2 = 980; cross: 15000*0.005 = 75
    assert 850 < same < 1120
    assert 40 < diff < 120
    # citations point from the newer application to the older one
    assert np.all(g.app_time[g.edges[:, 0]] >= g.app_time[g.edges[:, 1]])


def test_synthetic_deterministic():
    g1 = generate_synthetic_graph(3, 20, 0.3, 0.01, seed=42)
    g2 = generate_synthetic_graph(3, 20, 0.3, 0.01, seed=42)
    assert np.array_equal(g1.edges, g2.edges)
    np.testing.assert_array_equal(g1.app_time, g2.app_time)
    g3 = generate_synthetic_graph(3, 20, 0.3, 0.01, seed=43)
    assert not np.array_equal(g1.edges, g3.edges)


def test_synthetic_timestamps_integer_months_in_range():
    g = generate_synthetic_graph(2, 30, 0.2, 0.01, seed=1)
    assert np.all(g.app_time == np.floor(g.app_time))
    assert g.app_time.min() >= ym_to_months(1985, 1)
    assert g.app_time.max() <= ym_to_months(2006, 12)


def test_stats_json():
    g = small_graph()
    s = GraphStats.from_graph(g)
    assert s.node_count == 4 and s.edge_count == 4
    assert "node_count" in s.to_json()
