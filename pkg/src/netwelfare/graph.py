"""Adjacency storage and the graph operations used by estimation.

Graphs are stored in compressed sparse rows (``indptr``/``indices``),
sorted and duplicate free.  A directed graph keeps out-neighbors only;
operations that need symmetry (distances, coloring) symmetrize first.
"""

from __future__ import annotations

import csv
from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import DataIntegrityError

__all__ = [
    "Graph",
    "second_degree",
    "power_graph",
    "greedy_coloring",
    "max_degree_stats",
    "read_edge_csv",
    "write_edge_csv",
]


@dataclass(frozen=True)
class Graph:
    """Compressed adjacency over nodes ``0..n_nodes-1``.

    ``indices[indptr[i]:indptr[i+1]]`` are the (out-)neighbors of node
    ``i``, strictly increasing.  ``directed`` records whether edges were
    symmetrized at construction.
    """

    n_nodes: int
    indptr: np.ndarray
    indices: np.ndarray
    directed: bool = False

    @classmethod
    def from_edges(cls, n_nodes: int, edges, directed: bool = False) -> "Graph":
        """Build a graph from an iterable of ``(src, dst)`` pairs.

        Undirected graphs store both orientations.  Duplicate edges are
        collapsed; self-loops and out-of-range ids are integrity errors.
        """
        if n_nodes < 0:
            raise DataIntegrityError("n_nodes must be nonnegative")
        pairs = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
        if pairs.size:
            if pairs.min() < 0 or pairs.max() >= n_nodes:
                raise DataIntegrityError(
                    f"edge endpoint out of range for n_nodes={n_nodes}"
                )
            if np.any(pairs[:, 0] == pairs[:, 1]):
                raise DataIntegrityError("self-loops are not allowed")
            if not directed:
                pairs = np.vstack([pairs, pairs[:, ::-1]])
        src, dst = pairs[:, 0], pairs[:, 1]
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        if src.size:
            keep = np.ones(src.size, dtype=bool)
            keep[1:] = (src[1:] != src[:-1]) | (dst[1:] != dst[:-1])
            src, dst = src[keep], dst[keep]
        indptr = np.zeros(n_nodes + 1, dtype=np.int64)
        np.add.at(indptr, src + 1, 1)
        np.cumsum(indptr, out=indptr)
        return cls(n_nodes=n_nodes, indptr=indptr, indices=dst, directed=directed)

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i] : self.indptr[i + 1]]

    def degree(self, i: int) -> int:
        return int(self.indptr[i + 1] - self.indptr[i])

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    @property
    def n_edges(self) -> int:
        """Number of stored arcs (undirected edges count once)."""
        m = int(self.indices.size)
        return m if self.directed else m // 2

    def edge_list(self) -> np.ndarray:
        """Return edges as an array of ``(src, dst)`` rows.

        Undirected graphs report each edge once with ``src < dst``.
        """
        src = np.repeat(np.arange(self.n_nodes), np.diff(self.indptr))
        pairs = np.column_stack([src, self.indices])
        if not self.directed:
            pairs = pairs[pairs[:, 0] < pairs[:, 1]]
        return pairs

    def symmetrize(self) -> "Graph":
        if not self.directed:
            return self
        return Graph.from_edges(self.n_nodes, self.edge_list(), directed=False)

    def has_edge(self, i: int, j: int) -> bool:
        nbrs = self.neighbors(i)
        k = np.searchsorted(nbrs, j)
        return bool(k < nbrs.size and nbrs[k] == j)


def second_degree(graph: Graph, i: int) -> tuple[np.ndarray, np.ndarray]:
    """Second-degree neighbor multiset of node ``i``.

    Node ``j`` belongs with multiplicity equal to the number of
    intermediaries ``k`` outside ``{i, j}`` with arcs ``i->k`` and
    ``k->j``.  First-degree neighbors reachable through a third node are
    included; ``i`` itself never is.  Returns ``(nodes, multiplicities)``
    with nodes strictly increasing.
    """
    counts: dict[int, int] = {}
    for k in graph.neighbors(i):
        for j in graph.neighbors(k):
            if j != i and j != k:
                counts[int(j)] = counts.get(int(j), 0) + 1
    if not counts:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty.copy()
    nodes = np.array(sorted(counts), dtype=np.int64)
    mult = np.array([counts[int(j)] for j in nodes], dtype=np.int64)
    return nodes, mult


def _bfs_within(graph: Graph, start: int, radius: int, dist: np.ndarray) -> list[int]:
    """Nodes at distance 1..radius from ``start``; ``dist`` is scratch."""
    reached: list[int] = []
    dist[start] = 0
    queue = deque([start])
    while queue:
        v = queue.popleft()
        dv = dist[v]
        if dv == radius:
            continue
        for w in graph.neighbors(v):
            if dist[w] < 0:
                dist[w] = dv + 1
                reached.append(int(w))
                queue.append(int(w))
    dist[[start] + reached] = -1
    return reached


def power_graph(graph: Graph, radius: int) -> Graph:
    """Graph connecting nodes at (symmetrized) distance ``1..radius``.

    ``radius=0`` yields the empty graph on the same node set.
    """
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    g = graph.symmetrize()
    n = g.n_nodes
    if radius == 0:
        return Graph.from_edges(n, [], directed=False)
    dist = np.full(n, -1, dtype=np.int64)
    edges = []
    for i in range(n):
        for j in _bfs_within(g, i, radius, dist):
            if j > i:
                edges.append((i, j))
    return Graph.from_edges(n, edges, directed=False)


def greedy_coloring(graph: Graph) -> np.ndarray:
    """Proper coloring, greedy in descending degree order (ties by id).

    Each node takes the smallest color unused among already-colored
    neighbors, so at most ``max_degree + 1`` colors appear.
    """
    g = graph.symmetrize()
    n = g.n_nodes
    order = np.lexsort((np.arange(n), -g.degrees()))
    colors = np.full(n, -1, dtype=np.int64)
    for v in order:
        used = {colors[w] for w in g.neighbors(v) if colors[w] >= 0}
        c = 0
        while c in used:
            c += 1
        colors[v] = c
    return colors


def max_degree_stats(graph: Graph, depth: int, nodes=None) -> int:
    """Maximum degree among ``nodes`` and everything within ``depth`` hops.

    ``depth=0`` looks at the given nodes only; the default node set is
    the whole graph, for which any depth returns the global maximum.
    """
    g = graph.symmetrize()
    if g.n_nodes == 0:
        return 0
    if nodes is None:
        nodes = range(g.n_nodes)
    deg = g.degrees()
    dist = np.full(g.n_nodes, -1, dtype=np.int64)
    best = 0
    for i in nodes:
        best = max(best, int(deg[i]))
        if depth > 0:
            for j in _bfs_within(g, int(i), depth, dist):
                best = max(best, int(deg[j]))
    return best


def read_edge_csv(path, n_nodes: int, directed: bool = False) -> Graph:
    """Load a ``src,dst`` CSV (0-based ids) into a graph on ``n_nodes``."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["src", "dst"]:
            raise DataIntegrityError(f"{path}: expected header 'src,dst'")
        edges = []
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            try:
                edges.append((int(row[0]), int(row[1])))
            except (ValueError, IndexError) as exc:
                raise DataIntegrityError(f"{path}:{lineno}: bad edge row {row!r}") from exc
    return Graph.from_edges(n_nodes, edges, directed=directed)


def write_edge_csv(path, graph: Graph) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["src", "dst"])
        for s, d in graph.edge_list():
            writer.writerow([int(s), int(d)])
