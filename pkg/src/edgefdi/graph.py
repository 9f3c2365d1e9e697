"""Weighted digraphs, Laplacians and almost equitable partitions.

Vertices are numbered ``1..n`` at every public surface; arrays returned by
this module are 0-based as usual in numpy.  An arc ``(tail, head, w)`` means
that agent ``head`` receives information from agent ``tail`` with weight
``w``, so it lands in row ``head``, column ``tail`` of the adjacency matrix.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import InvalidGraph, InvalidPartition, NotAlmostEquitable, TrivialPartition

#: absolute tolerance for partition sums and commutation checks
TOL_EQ = 1e-9
#: dense adjacency cache is kept only up to this size
MAX_DENSE = 2048

__all__ = [
    "TOL_EQ",
    "WeightedDigraph",
    "Partition",
    "QuotientLaplacian",
    "laplacian",
    "is_strongly_connected",
    "is_almost_equitable",
    "quotient_laplacian",
    "cell_edge_pairs",
    "parse_graph",
    "format_graph",
    "read_graph",
    "write_graph",
]


@dataclass(frozen=True)
class WeightedDigraph:
    """Directed graph on vertices ``1..n`` with strictly positive arc weights."""

    n: int
    arcs: tuple = ()

    def __post_init__(self):
        n = self.n
        if int(n) != n or n < 2:
            raise InvalidGraph(f"vertex count must be an integer >= 2, got {n!r}")
        object.__setattr__(self, "n", int(n))
        if n > MAX_DENSE:
            raise InvalidGraph(f"dense representation limited to {MAX_DENSE} vertices")
        clean = []
        seen = set()
        for arc in self.arcs:
            if len(arc) == 2:
                tail, head, weight = arc[0], arc[1], 1.0
            else:
                tail, head, weight = arc
            if int(tail) != tail or int(head) != head:
                raise InvalidGraph(f"vertex indices must be integers: {arc!r}")
            tail, head, weight = int(tail), int(head), float(weight)
            if not (1 <= tail <= n and 1 <= head <= n):
                raise InvalidGraph(f"arc {tail}->{head} references a vertex outside [1, {n}]")
            if tail == head:
                raise InvalidGraph(f"self-loop at vertex {tail}")
            if not (weight > 0 and np.isfinite(weight)):
                raise InvalidGraph(f"arc {tail}->{head} has non-positive weight {weight}")
            if (tail, head) in seen:
                raise InvalidGraph(f"duplicate arc {tail}->{head}")
            seen.add((tail, head))
            clean.append((tail, head, weight))
        object.__setattr__(self, "arcs", tuple(clean))

    @classmethod
    def from_adjacency(cls, W):
        """Build from an adjacency matrix with ``W[i, j] > 0`` iff arc ``j+1 -> i+1``."""
        W = np.asarray(W, dtype=float)
        heads, tails = np.nonzero(W)
        arcs = [(int(j) + 1, int(i) + 1, W[i, j]) for i, j in zip(heads, tails)]
        arcs.sort()
        return cls(W.shape[0], tuple(arcs))

    @classmethod
    def undirected(cls, n, edges):
        """Each ``(u, v[, w])`` becomes the two arcs ``u->v`` and ``v->u``."""
        arcs = []
        for e in edges:
            u, v = e[0], e[1]
            w = e[2] if len(e) > 2 else 1.0
            arcs += [(u, v, w), (v, u, w)]
        return cls(n, tuple(arcs))

    @cached_property
    def adjacency(self):
        W = np.zeros((self.n, self.n))
        for tail, head, weight in self.arcs:
            W[head - 1, tail - 1] = weight
        W.flags.writeable = False
        return W

    def has_arc(self, tail, head):
        return 1 <= tail <= self.n and 1 <= head <= self.n and self.adjacency[head - 1, tail - 1] > 0

    def weight(self, tail, head):
        return float(self.adjacency[head - 1, tail - 1])

    def in_neighbors(self, head):
        return [t for t, h, _ in self.arcs if h == head]

    def out_neighbors(self, tail):
        return [h for t, h, _ in self.arcs if t == tail]

    def without_arc(self, tail, head):
        if not self.has_arc(tail, head):
            raise InvalidGraph(f"no arc {tail}->{head}")
        return WeightedDigraph(self.n, tuple(a for a in self.arcs if (a[0], a[1]) != (tail, head)))

    def relabel(self, order):
        """Renumber vertices so that old vertex ``order[k]`` becomes ``k+1``."""
        order = [int(v) for v in order]
        if sorted(order) != list(range(1, self.n + 1)):
            raise InvalidGraph("relabeling must be a permutation of the vertices")
        new = {old: k + 1 for k, old in enumerate(order)}
        return WeightedDigraph(self.n, tuple((new[t], new[h], w) for t, h, w in self.arcs))

    def is_symmetric(self):
        W = self.adjacency
        return bool(np.array_equal(W, W.T))


def laplacian(g: WeightedDigraph) -> np.ndarray:
    """Laplacian ``C - W`` with the in-degree ``C`` on the diagonal.

    The diagonal is the negated off-diagonal row sum, so ``L @ 1 == 0``
    holds in floating point, not only up to rounding.
    """
    L = -np.array(g.adjacency, dtype=float)
    np.fill_diagonal(L, 0.0)
    np.fill_diagonal(L, -L.sum(axis=1))
    return L


def is_strongly_connected(g: WeightedDigraph) -> bool:
    """Breadth-first search forwards and backwards from vertex 1."""

    def reach(adj):
        seen = {1}
        queue = deque([1])
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    queue.append(v)
        return len(seen)

    fwd = {v: [] for v in range(1, g.n + 1)}
    bwd = {v: [] for v in range(1, g.n + 1)}
    for tail, head, _ in g.arcs:
        fwd[tail].append(head)
        bwd[head].append(tail)
    return reach(fwd) == g.n and reach(bwd) == g.n


@dataclass(frozen=True)
class Partition:
    """Disjoint, non-empty cells of vertex indices (1-based)."""

    cells: tuple

    def __post_init__(self):
        cells = tuple(frozenset(int(v) for v in c) for c in self.cells)
        if any(not c for c in cells):
            raise InvalidPartition("cells must be non-empty")
        total = sum(len(c) for c in cells)
        if len(frozenset().union(*cells)) != total:
            raise InvalidPartition("cells must be pairwise disjoint")
        object.__setattr__(self, "cells", cells)

    @property
    def k(self):
        return len(self.cells)

    def check_covers(self, n):
        if frozenset().union(*self.cells) != frozenset(range(1, n + 1)):
            raise InvalidPartition(f"cells do not cover the vertex set [1, {n}]")

    def cell_of(self):
        return {v: i for i, c in enumerate(self.cells) for v in c}

    def characteristic_matrix(self, n):
        """``P[v-1, i] = 1`` iff vertex ``v`` lies in cell ``i``."""
        self.check_covers(n)
        P = np.zeros((n, self.k))
        for i, c in enumerate(self.cells):
            for v in c:
                P[v - 1, i] = 1.0
        return P


@dataclass(frozen=True)
class QuotientLaplacian:
    k: int
    matrix: np.ndarray
    cell_map: dict = field(compare=False)


def _cell_sums(g, p):
    """``S[v-1, j]`` = sum of Laplacian entries in row ``v`` over cell ``j``."""
    return laplacian(g) @ p.characteristic_matrix(g.n)


def is_almost_equitable(g: WeightedDigraph, p: Partition, tol=TOL_EQ) -> bool:
    """True iff in-weight sums from every other cell are constant inside each cell."""
    p.check_covers(g.n)
    if p.k == 1 or p.k == g.n:
        raise TrivialPartition(f"partition with {p.k} cells on {g.n} vertices is trivial")
    S = _cell_sums(g, p)
    for i, cell in enumerate(p.cells):
        rows = S[[v - 1 for v in sorted(cell)]]
        for j in range(p.k):
            if j != i and np.ptp(rows[:, j]) > tol:
                return False
    return True


def quotient_laplacian(g: WeightedDigraph, p: Partition, tol=TOL_EQ) -> QuotientLaplacian:
    """Laplacian of the quotient graph induced by an almost equitable partition."""
    if not is_almost_equitable(g, p, tol):
        raise NotAlmostEquitable("partition is not almost equitable for this graph")
    S = _cell_sums(g, p)
    Lq = np.zeros((p.k, p.k))
    for i, cell in enumerate(p.cells):
        v = min(cell)
        for j in range(p.k):
            if j != i:
                Lq[i, j] = S[v - 1, j]
        Lq[i, i] = -Lq[i].sum()
    return QuotientLaplacian(p.k, Lq, p.cell_of())


def cell_edge_pairs(p: Partition, g: WeightedDigraph) -> list:
    """Arcs ``(tail, head)`` of ``g`` whose endpoints share a cell of ``p``."""
    cell = p.cell_of()
    return [(t, h) for t, h, _ in g.arcs if cell.get(t) is not None and cell.get(t) == cell.get(h)]


# --- text format -----------------------------------------------------------


def parse_graph(text: str) -> WeightedDigraph:
    """Parse ``N <n>`` followed by ``<tail> <head> <weight>`` lines; ``#`` starts a comment."""
    n = None
    arcs = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            if n is None:
                if parts[0] != "N" or len(parts) != 2:
                    raise InvalidGraph(f"line {lineno}: expected 'N <n>' header")
                n = int(parts[1])
            elif len(parts) == 3:
                arcs.append((int(parts[0]), int(parts[1]), float(parts[2])))
            else:
                raise InvalidGraph(f"line {lineno}: expected '<tail> <head> <weight>'")
        except ValueError as exc:
            if isinstance(exc, InvalidGraph):
                raise
            raise InvalidGraph(f"line {lineno}: {exc}") from exc
    if n is None:
        raise InvalidGraph("missing 'N <n>' header")
    return WeightedDigraph(n, tuple(arcs))


def format_graph(g: WeightedDigraph) -> str:
    lines = [f"N {g.n}"]
    lines += [f"{t} {h} {w!r}" for t, h, w in g.arcs]
    return "\n".join(lines) + "\n"


def read_graph(path) -> WeightedDigraph:
    return parse_graph(Path(path).read_text())


def write_graph(g: WeightedDigraph, path):
    Path(path).write_text(format_graph(g))
