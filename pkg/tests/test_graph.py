import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from edgefdi.errors import InvalidGraph, InvalidPartition, NotAlmostEquitable, TrivialPartition
from edgefdi.fixtures import (
    SEVEN_NODE_A,
    complete_graph,
    k4_partition,
    path_graph,
    path_partition,
    random_almost_equitable,
    random_strongly_connected,
    seven_node_graph,
)
from edgefdi.graph import (
    Partition,
    WeightedDigraph,
    cell_edge_pairs,
    format_graph,
    is_almost_equitable,
    is_strongly_connected,
    laplacian,
    parse_graph,
    quotient_laplacian,
)


def reachable_pairs(g):
    """All ordered pairs joined by a directed path, by DFS from every vertex."""
    out = set()
    for s in range(1, g.n + 1):
        stack, seen = [s], {s}
        while stack:
            u = stack.pop()
            for v in g.out_neighbors(u):
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        out |= {(s, v) for v in seen}
    return out


def irreducible(g):
    L = np.abs(laplacian(g))
    M = np.linalg.matrix_power(np.eye(g.n) + L, g.n - 1)
    return bool(np.all(M > 0))


def random_digraph(rng, n, density):
    arcs = [(i, j, float(rng.uniform(0.1, 3))) for i in range(1, n + 1)
            for j in range(1, n + 1) if i != j and rng.random() < density]
    return WeightedDigraph(n, tuple(arcs))


def test_construction_rejects_bad_arcs():
    with pytest.raises(InvalidGraph):
        WeightedDigraph(3, ((1, 1, 1.0),))
    with pytest.raises(InvalidGraph):
        WeightedDigraph(3, ((1, 2, 0.0),))
    with pytest.raises(InvalidGraph):
        WeightedDigraph(3, ((1, 2, -1.0),))
    with pytest.raises(InvalidGraph):
        WeightedDigraph(3, ((1, 2, 1.0), (1, 2, 2.0)))
    with pytest.raises(InvalidGraph):
        WeightedDigraph(3, ((1, 4, 1.0),))
    with pytest.raises(InvalidGraph):
        WeightedDigraph(1, ())


def test_adjacency_orientation():
    g = WeightedDigraph(3, ((1, 2, 0.5),))
    assert g.adjacency[1, 0] == 0.5
    assert g.has_arc(1, 2) and not g.has_arc(2, 1)
    assert g.in_neighbors(2) == [1]
    assert g.out_neighbors(1) == [2]


def test_laplacian_two_cycle():
    g = WeightedDigraph(2, ((1, 2, 1.0), (2, 1, 1.0)))
    assert np.array_equal(laplacian(g), [[1, -1], [-1, 1]])


def test_laplacian_seven_node():
    L = laplacian(seven_node_graph())
    assert np.array_equal(L, 4 * (np.eye(7) - SEVEN_NODE_A))


def test_laplacian_isolated_vertex_row_zero():
    L = laplacian(WeightedDigraph(3, ((1, 2, 1.0),)))
    assert np.array_equal(L[2], np.zeros(3))


def test_laplacian_diagonal_is_negated_offdiagonal_sum():
    rng = np.random.default_rng(0)
    for _ in range(50):
        g = random_digraph(rng, int(rng.integers(2, 12)), 0.4)
        L = laplacian(g)
        off = L - np.diag(np.diag(L))
        assert np.array_equal(np.diag(L), -off.sum(axis=1))
        assert np.max(np.abs(L @ np.ones(g.n))) <= 1e-14 * max(1.0, np.max(np.abs(L)))


def test_laplacian_rows_sum_to_zero_exactly_for_dyadic_weights():
    rng = np.random.default_rng(4)
    for _ in range(50):
        n = int(rng.integers(2, 12))
        arcs = [(i, j, float(rng.integers(1, 9)) / 4) for i in range(1, n + 1)
                for j in range(1, n + 1) if i != j and rng.random() < 0.4]
        g = WeightedDigraph(n, tuple(arcs))
        assert np.all(laplacian(g) @ np.ones(n) == 0.0)


def test_laplacian_symmetric_for_undirected():
    rng = np.random.default_rng(1)
    for _ in range(20):
        n = int(rng.integers(3, 9))
        edges = [(i, j, float(rng.uniform(0.5, 2))) for i in range(1, n + 1)
                 for j in range(i + 1, n + 1) if rng.random() < 0.5]
        L = laplacian(WeightedDigraph.undirected(n, edges))
        assert np.array_equal(L, L.T)


def test_strong_connectivity_examples():
    assert is_strongly_connected(WeightedDigraph(3, ((1, 2), (2, 3), (3, 1))))
    assert not is_strongly_connected(WeightedDigraph(3, ((1, 2), (2, 3))))
    g = seven_node_graph()
    assert is_strongly_connected(g)
    assert len(reachable_pairs(g)) == 49


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 8), st.floats(0.05, 0.6))
def test_strong_connectivity_matches_irreducibility(seed, n, density):
    g = random_digraph(np.random.default_rng(seed), n, density)
    sc = is_strongly_connected(g)
    assert sc == irreducible(g)
    assert sc == (len(reachable_pairs(g)) == n * n)


def test_partition_validation():
    with pytest.raises(InvalidPartition):
        Partition(({1, 2}, {2, 3}))
    with pytest.raises(InvalidPartition):
        Partition(({1}, set()))
    with pytest.raises(InvalidPartition):
        Partition(({1}, {2})).characteristic_matrix(3)


def test_trivial_partitions_rejected():
    g = complete_graph(4)
    with pytest.raises(TrivialPartition):
        is_almost_equitable(g, Partition(({1}, {2}, {3}, {4})))
    with pytest.raises(TrivialPartition):
        is_almost_equitable(g, Partition(({1, 2, 3, 4},)))


def test_k4_partition():
    g, p = complete_graph(4), k4_partition()
    assert is_almost_equitable(g, p)
    q = quotient_laplacian(g, p)
    assert np.array_equal(q.matrix, [[2, -2], [-2, 2]])
    assert q.cell_map == {1: 0, 2: 0, 3: 1, 4: 1}


def test_path_partition():
    g, p = path_graph(3), path_partition()
    assert is_almost_equitable(g, p)
    # in-weight from cell {2} into 1 and 3 is 1 each; from {1,3} into 2 is 2
    assert np.array_equal(quotient_laplacian(g, p).matrix, [[1, -1], [-2, 2]])
    assert cell_edge_pairs(p, g) == []


def test_not_almost_equitable():
    g = path_graph(4)
    p = Partition(({1, 2}, {3, 4}))
    assert not is_almost_equitable(g, p)
    with pytest.raises(NotAlmostEquitable):
        quotient_laplacian(g, p)


def test_cell_edge_pairs():
    assert sorted(cell_edge_pairs(k4_partition(), complete_graph(4))) == [(1, 2), (2, 1), (3, 4), (4, 3)]
    singletons = Partition(({1}, {2}, {3}, {4}))
    assert cell_edge_pairs(singletons, complete_graph(4)) == []


def test_lifted_partitions_commute_and_embed_spectrum():
    rng = np.random.default_rng(7)
    for _ in range(30):
        k = int(rng.integers(2, 4))
        sizes = [int(s) for s in rng.integers(1, 4, size=k)]
        if sum(sizes) <= k:
            sizes[0] += 1
        Q = rng.uniform(0.5, 2.0, size=(k, k))
        g, p = random_almost_equitable(rng, sizes, Q)
        assert is_almost_equitable(g, p)
        q = quotient_laplacian(g, p)
        L = laplacian(g)
        P = p.characteristic_matrix(g.n)
        assert np.max(np.abs(L @ P - P @ q.matrix)) < 1e-9
        lq = np.linalg.eigvals(q.matrix)
        ll = np.linalg.eigvals(L)
        assert all(np.min(np.abs(ll - z)) < 1e-7 for z in lq)
        assert np.allclose(q.matrix.sum(axis=1), 0, atol=1e-12)
        assert np.all(q.matrix - np.diag(np.diag(q.matrix)) <= 0)


def test_quotient_eigenvectors_lift():
    g, p = complete_graph(4), k4_partition()
    q = quotient_laplacian(g, p)
    L, P = laplacian(g), p.characteristic_matrix(4)
    vals, vecs = np.linalg.eig(q.matrix)
    for lam, u in zip(vals, vecs.T):
        assert np.linalg.norm(L @ P @ u - lam * P @ u) < 1e-12


def test_text_format_round_trip():
    rng = np.random.default_rng(3)
    g = random_strongly_connected(rng, 6)
    text = format_graph(g)
    assert parse_graph(text) == g
    g2 = parse_graph("# comment\nN 3\n1 2 1.5  # trailing\n\n2 3 1\n3 1 2\n")
    assert g2.weight(1, 2) == 1.5 and g2.n == 3
    with pytest.raises(InvalidGraph):
        parse_graph("1 2 3\n")
    with pytest.raises(InvalidGraph):
        parse_graph("N 3\n1 2\n")


def test_relabel():
    g = WeightedDigraph(3, ((1, 2, 1.0), (2, 3, 2.0), (3, 1, 3.0)))
    h = g.relabel([3, 1, 2])
    # old 3 -> 1, old 1 -> 2, old 2 -> 3
    assert h.weight(2, 3) == 1.0 and h.weight(3, 1) == 2.0 and h.weight(1, 2) == 3.0
