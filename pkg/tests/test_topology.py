import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from socialdsa.errors import ConfigurationError, EdgeListParseError
from socialdsa.topology import (SelectionPolicy, Topology, UserParams, build_interference_graph,
                                generate_er_social_graph, load_social_graph_edgelist, neighbor_lists, neighbors,
                                parse_edgelist, place_users)


def _users(*xs):
    return [UserParams(id=k, position=(float(x), 0.0), contention_prob=0.2) for k, x in enumerate(xs)]


def _edges(adjacency):
    return {(int(a), int(b)) for a, b in zip(*np.nonzero(np.triu(adjacency)))}


def test_close_pair_interferes():
    assert _edges(build_interference_graph(_users(0, 50), 100.0)) == {(0, 1)}


def test_single_user_has_no_edges():
    adjacency = build_interference_graph(_users(0), 100.0)
    assert adjacency.shape == (1, 1) and not adjacency.any()


def test_collinear_users():
    assert _edges(build_interference_graph(_users(0, 80, 160), 100.0)) == {(0, 1), (1, 2)}


def test_range_is_inclusive():
    assert _edges(build_interference_graph(_users(0, 100), 100.0)) == {(0, 1)}


def test_nonpositive_delta_rejected():
    with pytest.raises(ConfigurationError, match=r"\[topology\] delta"):
        build_interference_graph(_users(0, 1), 0.0)


@pytest.mark.parametrize("p", [0.0, 1.0, -0.2])
def test_contention_probability_must_be_open_interval(p):
    with pytest.raises(ConfigurationError):
        UserParams(id=0, position=(0.0, 0.0), contention_prob=p)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), n=st.integers(1, 15), delta=st.floats(1.0, 400.0))
def test_interference_graph_is_symmetric_irreflexive_and_distance_based(seed, n, delta):
    rng = np.random.default_rng(seed)
    positions = place_users(n, 500.0, rng)
    users = [UserParams(k, tuple(p), 0.1) for k, p in enumerate(positions)]
    adjacency = build_interference_graph(users, delta)
    assert (adjacency == adjacency.T).all()
    assert not adjacency.diagonal().any()
    distance = np.linalg.norm(positions[:, None, :] - positions[None, :, :], axis=-1)
    off_diagonal = ~np.eye(n, dtype=bool)
    assert (adjacency[off_diagonal] == (distance <= delta)[off_diagonal]).all()


def test_er_extremes():
    rng = np.random.default_rng(0)
    assert not generate_er_social_graph(6, 0.0, rng).any()
    complete = generate_er_social_graph(6, 1.0, rng)
    assert complete.sum() // 2 == 15
    assert not complete.diagonal().any()


def test_er_mean_edge_count():
    rng = np.random.default_rng(42)
    counts = np.array([generate_er_social_graph(20, 0.2, rng).sum() // 2 for _ in range(2000)])
    # binomial(190, 0.2): mean 38, sd ~5.5
    se = counts.std(ddof=1) / np.sqrt(len(counts))
    assert abs(counts.mean() - 38.0) < 4 * se


def test_er_graphs_nest_as_link_probability_grows():
    sparse = generate_er_social_graph(25, 0.2, np.random.default_rng(8))
    dense = generate_er_social_graph(25, 0.6, np.random.default_rng(8))
    assert (dense | ~sparse).all()


def test_edgelist_direct_read():
    adjacency, ids = load_social_graph_edgelist("0 1\n1 2", 3)
    assert ids == (0, 1, 2)
    assert _edges(adjacency) == {(0, 1), (1, 2)}


def test_edgelist_symmetrizes_and_drops_self_loops():
    adjacency, _ = load_social_graph_edgelist("0 1\n1 0\n1 1", 2)
    assert _edges(adjacency) == {(0, 1)}
    assert not adjacency.diagonal().any()


def test_edgelist_skips_comments_and_blank_lines():
    trace = parse_edgelist(["# friends", "", "  5 7  ", "7 9 extra-column"])
    assert trace.node_order == (5, 7, 9)
    assert trace.graph.number_of_edges() == 2


@pytest.mark.parametrize("bad, line_number", [("0 1\nfoo bar\n", 2), ("0 1\n\n3\n", 3), ("-1 2\n", 1)])
def test_malformed_line_reports_line_number(bad, line_number):
    with pytest.raises(EdgeListParseError) as excinfo:
        parse_edgelist(bad.splitlines())
    assert excinfo.value.line_number == line_number


def test_trace_restricted_to_first_n_nodes():
    rng = np.random.default_rng(4)
    lines = [f"{a} {b}" for a in range(100) for b in range(a + 1, 100) if rng.random() < 0.05]
    trace = parse_edgelist(lines)
    adjacency, ids = load_social_graph_edgelist(trace, 10)
    assert ids == trace.node_order[:10]
    expected = {(i, j) for i in range(10) for j in range(i + 1, 10) if trace.graph.has_edge(ids[i], ids[j])}
    assert _edges(adjacency) == expected


def test_random_selection_assigns_distinct_trace_nodes():
    lines = [f"{k} {k + 1}" for k in range(30)]
    adjacency, ids = load_social_graph_edgelist(lines, 12, selection=SelectionPolicy.RANDOM_N,
                                                rng=np.random.default_rng(2))
    assert len(set(ids)) == 12
    assert (adjacency == adjacency.T).all()
    for i in range(12):
        for j in range(12):
            if i != j:
                assert adjacency[i, j] == (abs(ids[i] - ids[j]) == 1)


def test_explicit_id_map():
    adjacency, ids = load_social_graph_edgelist("0 1\n1 2\n2 3", 2, id_map=[3, 2])
    assert ids == (3, 2)
    assert adjacency[0, 1]


def test_trace_too_small_for_n():
    with pytest.raises(ConfigurationError, match="edgelist_path"):
        load_social_graph_edgelist("0 1\n1 2", 5)


def test_neighbors():
    complete = ~np.eye(3, dtype=bool)
    assert neighbors(complete, 0) == {1, 2}
    assert neighbors(np.zeros((3, 3), dtype=bool), 1) == frozenset()
    path = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=bool)
    assert neighbors(path, 1) == {0, 2}
    assert neighbor_lists(path) == ((1,), (0, 2), (1,))
    with pytest.raises(IndexError):
        neighbors(path, 3)


def test_topology_validates_adjacency():
    asymmetric = np.array([[0, 1], [0, 0]], dtype=bool)
    symmetric = np.array([[0, 1], [1, 0]], dtype=bool)
    with pytest.raises(ConfigurationError):
        Topology(2, asymmetric, symmetric, 100.0)
    with pytest.raises(ConfigurationError):
        Topology(2, symmetric, np.eye(2, dtype=bool), 100.0)
    topology = Topology(2, symmetric, symmetric, 100.0)
    assert topology.interference_degree_max == 1
    assert topology.social_links == 1
