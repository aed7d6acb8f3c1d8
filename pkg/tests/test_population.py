"""Population graph construction, parsing, and synthesis."""

import io

import numpy as np
import pytest

from linktrace import PopulationGraph, load_edge_list, random_population, write_edge_list


def test_parse_single_edge_with_isolated_node():
    g = load_edge_list(io.StringIO("nodes=3\n0,1\n"))
    assert g.n_nodes == 3
    assert list(g.degrees) == [1, 1, 0]
    assert g.has_edge(0, 1) and g.has_edge(1, 0)
    assert not g.has_edge(0, 2)


def test_parse_two_components():
    text = "nodes=5\n# a comment\n0,1\n1,2\n\n3,4\n"
    g = load_edge_list(io.StringIO(text))
    assert list(g.degrees) == [1, 2, 1, 1, 1]
    assert g.n_edges == 3
    assert g.mean_degree == pytest.approx(6 / 5)


def test_parse_rejects_self_loop():
    with pytest.raises(ValueError, match="self loop"):
        load_edge_list(io.StringIO("nodes=2\n0,0\n"))


def test_parse_rejects_out_of_range_node():
    with pytest.raises(ValueError, match="outside"):
        load_edge_list(io.StringIO("nodes=2\n0,5\n"))


def test_parse_error_messages_carry_line_numbers():
    with pytest.raises(ValueError, match="line 1"):
        load_edge_list(io.StringIO("5\n0,1\n"))
    with pytest.raises(ValueError, match="line 3"):
        load_edge_list(io.StringIO("nodes=4\n0,1\n2;3\n"))
    with pytest.raises(ValueError, match="line 2"):
        load_edge_list(io.StringIO("nodes=4\n0,x\n"))
    with pytest.raises(ValueError, match="header"):
        load_edge_list(io.StringIO(""))


def test_duplicate_and_reversed_edges_collapse():
    g = PopulationGraph(3, [(0, 1), (1, 0), (0, 1)])
    assert g.n_edges == 1


def test_constructor_validation():
    with pytest.raises(ValueError):
        PopulationGraph(0, [])
    with pytest.raises(ValueError, match="self loop"):
        PopulationGraph(3, [(2, 2)])
    with pytest.raises(ValueError, match="outside"):
        PopulationGraph(3, [(0, 3)])
    with pytest.raises(ValueError, match="outside"):
        PopulationGraph(3, [(-1, 0)])


def test_round_trip_through_file(tmp_path):
    g = PopulationGraph(6, [(0, 1), (1, 2), (3, 4), (1, 4)])
    path = tmp_path / "pop.txt"
    write_edge_list(g, path)
    assert load_edge_list(path) == g
    # and through a stream
    buf = io.StringIO()
    write_edge_list(g, buf)
    assert load_edge_list(io.StringIO(buf.getvalue())) == g


def test_mean_degree_values():
    complete = PopulationGraph(4, [(i, j) for i in range(4) for j in range(i)])
    assert complete.mean_degree == 3.0
    empty = PopulationGraph(7, [])
    assert empty.mean_degree == 0.0
    five = PopulationGraph(5, [(0, 1), (1, 2), (3, 4)])
    assert five.mean_degree == pytest.approx(1.2)


def test_neighbors_and_degree_agree():
    g = PopulationGraph(5, [(0, 1), (1, 2), (3, 4), (0, 4)])
    for node in range(5):
        nbrs = g.neighbors(node)
        assert g.degree(node) == len(nbrs)
        assert list(nbrs) == sorted(set(nbrs))
        assert node not in nbrs
        for other in nbrs:
            assert node in g.neighbors(int(other))


def test_random_population_hits_requested_density():
    g = random_population(595, 2.45, seed=1959)
    assert g.n_nodes == 595
    assert 2.0 <= g.mean_degree <= 2.9


def test_random_population_extremes():
    assert random_population(10, 0.0, seed=1).n_edges == 0
    g = random_population(4, 3.0, seed=2)
    assert g.n_edges == 6  # p=1: complete


def test_random_population_seeding():
    a = random_population(200, 3.0, seed=42)
    b = random_population(200, 3.0, seed=42)
    c = random_population(200, 3.0, seed=43)
    assert a == b
    assert a != c


def test_random_population_rejects_bad_density():
    with pytest.raises(ValueError):
        random_population(10, 12.0, seed=0)
    with pytest.raises(ValueError):
        random_population(10, -0.5, seed=0)


def test_generated_adjacency_is_symmetric_and_loop_free():
    # exhaustive structural check on one generated graph
    g = random_population(1000, 3.0, seed=7)
    degs = np.zeros(1000, dtype=int)
    for i, j in g.edge_set():
        assert i < j
        assert 0 <= i < 1000 and 0 <= j < 1000
        degs[i] += 1
        degs[j] += 1
    assert list(degs) == list(g.degrees)
    assert int(degs.sum()) == 2 * g.n_edges
