"""Random semi-Markovian graphs for property tests and benchmarks."""

from __future__ import annotations

import numpy as np

from .graph import BidirectedEdge, DirectedEdge, MixedGraph


def random_graph(rng: np.random.Generator | int, n: int, p_directed: float = 0.4,
                 p_bidirected: float = 0.25, prefix: str = "v") -> MixedGraph:
    """Nodes ``v0..v{n-1}`` in causal order; each pair gets each edge type independently."""
    rng = np.random.default_rng(rng)
    nodes = [f"{prefix}{i}" for i in range(n)]
    directed, bidirected = [], []
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < p_directed:
                directed.append(DirectedEdge(nodes[i], nodes[j], f"l{i}_{j}"))
            if rng.random() < p_bidirected:
                bidirected.append(BidirectedEdge(nodes[i], nodes[j], f"w{i}_{j}"))
    return MixedGraph(nodes, directed, bidirected)


def graph_corpus(seed: int, count: int, max_nodes: int, min_nodes: int = 2) -> list[MixedGraph]:
    """A fixed schedule of graphs cycling through sparse, medium and dense settings."""
    rng = np.random.default_rng(seed)
    densities = [(0.25, 0.15), (0.4, 0.25), (0.6, 0.35)]
    out = []
    for k in range(count):
        n = int(rng.integers(min_nodes, max_nodes + 1))
        pd, pb = densities[k % len(densities)]
        out.append(random_graph(rng, n, pd, pb))
    return out
