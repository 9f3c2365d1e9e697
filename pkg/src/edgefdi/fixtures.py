"""Reference networks used by the tests, the demos and ``repro-paper``."""

import numpy as np

from .graph import Partition, WeightedDigraph

#: arcs (tail, head) of the seven-agent benchmark network, unit weights
SEVEN_NODE_ARCS = ((4, 1), (5, 2), (6, 3), (7, 4), (1, 5), (6, 5), (2, 6), (3, 7), (5, 7))
SEVEN_NODE_KAPPA = 0.25
SEVEN_NODE_OBSERVED = (1, 2, 3)

#: its consensus matrix for κ = 0.25, entries are exact binary fractions
SEVEN_NODE_A = np.array([
    [0.75, 0, 0, 0.25, 0, 0, 0],
    [0, 0.75, 0, 0, 0.25, 0, 0],
    [0, 0, 0.75, 0, 0, 0.25, 0],
    [0, 0, 0, 0.75, 0, 0, 0.25],
    [0.25, 0, 0, 0, 0.5, 0.25, 0],
    [0, 0.25, 0, 0, 0, 0.75, 0],
    [0, 0, 0.25, 0, 0.25, 0, 0.5],
])

#: two fault-injection runs; each fault is (first, last, tail, head) over the
#: states produced while the arc is down
SIM1_X0 = (10.0, -1.0, 1.0, 8.0, 5.0, 5.0, 12.0)
SIM2_X0 = (-5.0, 5.0, 5.0, -5.0, -5.0, 5.0, -5.0)
SIM_FAULTS = ((10, 14, 6, 5), (20, 24, 5, 7))
SIM_HORIZON = 60


def seven_node_graph():
    return WeightedDigraph(7, SEVEN_NODE_ARCS)


def complete_graph(n, weight=1.0):
    return WeightedDigraph(n, tuple((i, j, weight) for i in range(1, n + 1)
                                    for j in range(1, n + 1) if i != j))


def path_graph(n):
    """Undirected path ``1 - 2 - ... - n``."""
    return WeightedDigraph.undirected(n, [(i, i + 1) for i in range(1, n)])


def cycle_graph(n, directed=True):
    edges = [(i, i % n + 1) for i in range(1, n + 1)]
    if directed:
        return WeightedDigraph(n, tuple(edges))
    return WeightedDigraph.undirected(n, edges)


def k4_partition():
    return Partition(({1, 2}, {3, 4}))


def path_partition():
    return Partition(({1, 3}, {2}))


def two_path_graph():
    """Two parallel two-hop routes ``1 -> 2 -> 4`` and ``1 -> 3 -> 4`` closed by ``4 -> 1``.

    Swapping vertices 2 and 3 is an automorphism, so losing ``2 -> 4`` or
    ``3 -> 4`` yields similar matrices with equal spectra.
    """
    return WeightedDigraph(4, ((1, 2), (1, 3), (2, 4), (3, 4), (4, 1)))


def symmetric_pair_graph(a=1.0, b=2.0):
    """Undirected diamond ``1 - 2 - 4``, ``1 - 3 - 4`` with weights ``a`` (at 1) and ``b`` (at 4).

    Swapping 2 and 3 is an automorphism, so losing ``2 -> 4`` or ``3 -> 4``
    gives similar matrices with equal spectra.  With ``a != b`` the healthy
    spectrum is simple and every single-arc loss keeps strong connectivity.
    """
    return WeightedDigraph.undirected(4, [(1, 2, a), (1, 3, a), (2, 4, b), (3, 4, b)])


def random_strongly_connected(rng, n, extra=None, weights=(0.5, 2.0)):
    """Random digraph: a shuffled Hamiltonian cycle plus random extra arcs."""
    order = rng.permutation(n) + 1
    arcs = {(int(order[k]), int(order[(k + 1) % n])) for k in range(n)}
    if extra is None:
        extra = int(rng.integers(n // 2, 2 * n + 1))
    for _ in range(extra):
        t, h = rng.choice(n, size=2, replace=False) + 1
        arcs.add((int(t), int(h)))
    lo, hi = weights
    return WeightedDigraph(n, tuple((t, h, float(rng.uniform(lo, hi))) for t, h in sorted(arcs)))


def random_undirected_connected(rng, n, extra=None, weights=(0.5, 2.0)):
    """Random connected undirected graph: a random spanning tree plus chords."""
    order = rng.permutation(n) + 1
    edges = {}
    for k in range(1, n):
        u, v = int(order[k]), int(order[rng.integers(0, k)])
        edges[frozenset((u, v))] = float(rng.uniform(*weights))
    if extra is None:
        extra = int(rng.integers(1, n + 1))
    for _ in range(extra):
        u, v = rng.choice(n, size=2, replace=False) + 1
        edges.setdefault(frozenset((int(u), int(v))), float(rng.uniform(*weights)))
    return WeightedDigraph.undirected(n, [(*sorted(e), w) for e, w in edges.items()])


def random_almost_equitable(rng, sizes, quotient_weights):
    """Random digraph with an almost equitable partition into cells of ``sizes``.

    Every vertex of cell ``i`` receives total weight ``quotient_weights[i][j]``
    from cell ``j``, spread randomly over that cell; arcs inside a cell are
    random.  Returns the graph and the partition (cells are consecutive
    vertex ranges).
    """
    cells, start = [], 1
    for s in sizes:
        cells.append(list(range(start, start + s)))
        start += s
    n = start - 1
    W = np.zeros((n, n))
    for i, ci in enumerate(cells):
        for j, cj in enumerate(cells):
            for v in ci:
                if i == j:
                    for u in cj:
                        if u != v and rng.random() < 0.5:
                            W[v - 1, u - 1] = rng.uniform(0.2, 1.5)
                elif quotient_weights[i][j] > 0:
                    share = rng.dirichlet(np.ones(len(cj)))
                    W[v - 1, [u - 1 for u in cj]] = quotient_weights[i][j] * share
    return WeightedDigraph.from_adjacency(W), Partition(tuple(set(c) for c in cells))


def safe_kappa(g, fraction=0.5):
    """``fraction`` of the largest admissible coupling strength."""
    return fraction / float(np.max(g.adjacency.sum(axis=1)))
