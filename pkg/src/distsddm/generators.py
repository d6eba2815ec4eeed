"""Seeded graph families and grounded SDDM systems for experiments and tests."""
from __future__ import annotations

from dataclasses import dataclass

import networkx as nx
import numpy as np

from .linalg import (
    Splitting,
    WeightedGraph,
    ground_shift,
    ground_submatrix,
    laplacian_from_graph,
    standard_splitting,
)


def path_graph(n: int, weight: float = 1.0) -> WeightedGraph:
    return WeightedGraph(n, tuple((i, i + 1, weight) for i in range(n - 1)))


def cycle_graph(n: int, weight: float = 1.0) -> WeightedGraph:
    if n < 3:
        raise ValueError("a cycle needs at least 3 nodes")
    return WeightedGraph(n, tuple((i, (i + 1) % n, weight) for i in range(n)))


def grid_graph(rows: int, cols: int, weight: float = 1.0) -> WeightedGraph:
    edges = []
    for r in range(rows):
        for c in range(cols):
            v = r * cols + c
            if c + 1 < cols:
                edges.append((v, v + 1, weight))
            if r + 1 < rows:
                edges.append((v, v + cols, weight))
    return WeightedGraph(rows * cols, tuple(edges))


def complete_graph(n: int, weight: float = 1.0) -> WeightedGraph:
    return WeightedGraph(n, tuple((i, j, weight) for i in range(n) for j in range(i + 1, n)))


def random_connected_graph(
    n: int, p: float, rng: np.random.Generator, w_low: float = 1.0, w_high: float = 10.0
) -> WeightedGraph:
    """Erdős–Rényi ``G(n, p)`` redrawn until connected, weights uniform in ``[w_low, w_high]``."""
    if n < 2:
        raise ValueError("need at least 2 nodes")
    while True:
        upper = np.triu(rng.random((n, n)) < p, 1)
        iu, ju = np.nonzero(upper)
        w = rng.uniform(w_low, w_high, size=iu.size)
        G = WeightedGraph(n, tuple(zip(iu.tolist(), ju.tolist(), w.tolist())))
        if G.is_connected():
            return G


def grounding_node(G: WeightedGraph) -> int:
    """Largest-index node whose removal keeps the graph connected."""
    nxg = nx.Graph()
    nxg.add_nodes_from(range(G.n))
    nxg.add_edges_from((i, j) for i, j, _ in G.edges)
    cut = set(nx.articulation_points(nxg))
    return max(v for v in range(G.n) if v not in cut)


def subgraph(G: WeightedGraph, keep: list[int]) -> WeightedGraph:
    pos = {v: t for t, v in enumerate(keep)}
    return WeightedGraph(
        len(keep), tuple((pos[i], pos[j], w) for i, j, w in G.edges if i in pos and j in pos)
    )


@dataclass(frozen=True)
class GroundedSystem:
    """An SDDM system derived from a connected graph, with the graph it lives on."""

    graph: WeightedGraph  # communication graph of the unknowns
    M: np.ndarray
    splitting: Splitting
    grounding: str
    grounded_node: int | None = None
    sigma: float | None = None
    source: WeightedGraph | None = None

    @property
    def n(self) -> int:
        return self.M.shape[0]


def ground(G: WeightedGraph, grounding: str = "submatrix", sigma: float = 1.0, node: int | None = None) -> GroundedSystem:
    """Turn the Laplacian of ``G`` into an SDDM system.

    ``submatrix`` deletes one row/column (default: :func:`grounding_node`);
    ``shift`` adds ``sigma * I``.
    """
    L = laplacian_from_graph(G)
    if grounding == "submatrix":
        node = grounding_node(G) if node is None else node
        M, keep = ground_submatrix(L, node)
        return GroundedSystem(subgraph(G, keep), M, standard_splitting(M), grounding, node, None, G)
    if grounding == "shift":
        M = ground_shift(L, sigma)
        return GroundedSystem(G, M, standard_splitting(M), grounding, None, sigma, G)
    raise ValueError(f"unknown grounding {grounding!r}")


def random_system(
    seed: int, n_range: tuple[int, int] = (5, 50), p: float = 0.3, w_range: tuple[float, float] = (1.0, 10.0)
) -> GroundedSystem:
    """Seeded random connected weighted graph, grounded by row/column deletion."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(n_range[0], n_range[1] + 1))
    G = random_connected_graph(n, p, rng, *w_range)
    return ground(G, "submatrix")


def random_sddm(n: int, rng: np.random.Generator, density: float = 0.5, slack: float = 0.5) -> np.ndarray:
    """Random dense-ish SDDM matrix: random non-negative ``A`` plus a dominant diagonal."""
    A = np.triu(rng.uniform(0.0, 1.0, (n, n)) * (rng.random((n, n)) < density), 1)
    A = A + A.T
    D = A.sum(axis=1) + rng.uniform(0.05, slack + 0.05, n)
    return np.diag(D) - A
