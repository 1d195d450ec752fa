"""Shared fixtures: small graphs with hand-checked expected values."""

from __future__ import annotations

import numpy as np
import pytest

from netwelfare.graph import Graph

# Six-node graph used throughout: a triangle 0-1-2 with pendants
# 5-0, 4-1, 3-2.  Degrees 3,3,3,1,1,1; diameter 3.
SIX_NODE_EDGES = [(0, 1), (0, 2), (0, 5), (1, 2), (1, 4), (2, 3)]

# Hand-derived second-degree multisets {node: multiplicity} per node.
SIX_NODE_SECOND = {
    0: {1: 1, 2: 1, 3: 1, 4: 1},
    1: {0: 1, 2: 1, 3: 1, 5: 1},
    2: {0: 1, 1: 1, 4: 1, 5: 1},
    3: {0: 1, 1: 1},
    4: {0: 1, 2: 1},
    5: {1: 1, 2: 1},
}


@pytest.fixture
def six_node_graph() -> Graph:
    return Graph.from_edges(6, SIX_NODE_EDGES)


def bfs_distance(graph: Graph, src: int, dst: int) -> float:
    """Independent BFS distance oracle on the symmetrized graph."""
    g = graph.symmetrize()
    if src == dst:
        return 0
    seen = {src}
    frontier = [src]
    d = 0
    while frontier:
        d += 1
        nxt = []
        for v in frontier:
            for w in g.neighbors(v):
                w = int(w)
                if w == dst:
                    return d
                if w not in seen:
                    seen.add(w)
                    nxt.append(w)
        frontier = nxt
    return float("inf")


def random_graph(rng: np.random.Generator, n: int, p: float, directed: bool = False) -> Graph:
    mask = rng.random((n, n)) < p
    np.fill_diagonal(mask, False)
    if not directed:
        mask = np.triu(mask)
    edges = list(zip(*np.nonzero(mask)))
    return Graph.from_edges(n, edges, directed=directed)
