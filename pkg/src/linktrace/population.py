"""Undirected population graphs: the sampling frame for link-traced surveys.

A population is a fixed set of nodes ``0..n_nodes-1`` plus a symmetric,
loop-free 0/1 adjacency relation.  Out-degree equals in-degree equals
degree throughout.
"""

from __future__ import annotations

import io
from os import PathLike
from typing import Iterable

import numpy as np

from ._validation import check_count, ensure_rng

__all__ = ["PopulationGraph", "load_edge_list", "write_edge_list", "random_population"]


class PopulationGraph:
    """Immutable undirected graph over nodes ``0..n_nodes-1``.

    Args:
        n_nodes: number of nodes; must be positive.
        edges: iterable of (i, j) pairs.  Order and duplicates are
            ignored.  Self loops and out-of-range ids are rejected.
    """

    def __init__(self, n_nodes: int, edges: Iterable[tuple[int, int]]):
        n_nodes = check_count(n_nodes, "n_nodes", minimum=1)
        canon = set()
        for i, j in edges:
            i, j = int(i), int(j)
            if i == j:
                raise ValueError(f"self loop on node {i}")
            if not (0 <= i < n_nodes and 0 <= j < n_nodes):
                raise ValueError(f"edge ({i},{j}) outside 0..{n_nodes - 1}")
            canon.add((i, j) if i < j else (j, i))
        self._n = n_nodes
        self._edges = frozenset(canon)
        nbrs: list[list[int]] = [[] for _ in range(n_nodes)]
        for i, j in canon:
            nbrs[i].append(j)
            nbrs[j].append(i)
        self._neighbors = tuple(np.array(sorted(a), dtype=np.int64) for a in nbrs)
        self._degrees = np.array([len(a) for a in nbrs], dtype=np.int64)
        self._degrees.setflags(write=False)

    @property
    def n_nodes(self) -> int:
        return self._n

    @property
    def n_edges(self) -> int:
        return len(self._edges)

    @property
    def degrees(self) -> np.ndarray:
        """Degree of every node, as a read-only int array."""
        return self._degrees

    @property
    def mean_degree(self) -> float:
        """Average degree over all nodes (2 * n_edges / n_nodes)."""
        return 2.0 * len(self._edges) / self._n

    def degree(self, node: int) -> int:
        return int(self._degrees[node])

    def neighbors(self, node: int) -> np.ndarray:
        """Sorted neighbor ids of ``node``."""
        return self._neighbors[node]

    def has_edge(self, i: int, j: int) -> bool:
        return ((i, j) if i < j else (j, i)) in self._edges

    def edge_set(self) -> frozenset[tuple[int, int]]:
        """All edges as (min, max) pairs."""
        return self._edges

    def __eq__(self, other) -> bool:
        if not isinstance(other, PopulationGraph):
            return NotImplemented
        return self._n == other._n and self._edges == other._edges

    def __repr__(self) -> str:
        return f"PopulationGraph(n_nodes={self._n}, n_edges={len(self._edges)})"


def load_edge_list(source) -> PopulationGraph:
    """Read a graph from the line-oriented edge-list format.

    The first non-comment line must be ``nodes=<count>``; every further
    non-comment line is an ``i,j`` pair.  Blank lines and ``#`` comments
    are allowed.  ``source`` may be a path or an open text stream.

    Raises:
        ValueError: on malformed lines, with the 1-based line number.
    """
    if hasattr(source, "read"):
        return _parse_edge_lines(source)
    with open(source, "r", encoding="utf-8") as fh:
        return _parse_edge_lines(fh)


def _parse_edge_lines(stream: io.TextIOBase) -> PopulationGraph:
    n_nodes = None
    edges = []
    for lineno, raw in enumerate(stream, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if n_nodes is None:
            if not line.startswith("nodes="):
                raise ValueError(f"line {lineno}: expected 'nodes=<count>' header")
            try:
                n_nodes = int(line[len("nodes="):])
            except ValueError:
                raise ValueError(f"line {lineno}: bad node count {line!r}") from None
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected 'i,j', got {raw.rstrip()!r}")
        try:
            i, j = int(parts[0]), int(parts[1])
        except ValueError:
            raise ValueError(f"line {lineno}: non-integer node id in {raw.rstrip()!r}") from None
        edges.append((i, j))
    if n_nodes is None:
        raise ValueError("empty edge-list input: missing 'nodes=<count>' header")
    try:
        return PopulationGraph(n_nodes, edges)
    except ValueError as exc:
        raise ValueError(f"invalid edge list: {exc}") from exc


def write_edge_list(graph: PopulationGraph, target) -> None:
    """Write ``graph`` in the format accepted by :func:`load_edge_list`."""
    def _emit(fh):
        fh.write(f"nodes={graph.n_nodes}\n")
        for i, j in sorted(graph.edge_set()):
            fh.write(f"{i},{j}\n")

    if hasattr(target, "write"):
        _emit(target)
        return
    with open(target, "w", encoding="utf-8") as fh:
        _emit(fh)


def random_population(n_nodes: int, mean_degree: float, seed=None) -> PopulationGraph:
    """Sample a graph with each pair linked independently.

    The common link probability is ``mean_degree / (n_nodes - 1)``, so the
    expected average degree equals ``mean_degree``.

    Args:
        n_nodes: population size, at least 2.
        mean_degree: target expected degree in ``[0, n_nodes - 1]``.
        seed: anything :func:`ensure_rng` accepts.
    """
    n_nodes = check_count(n_nodes, "n_nodes", minimum=2)
    p = float(mean_degree) / (n_nodes - 1)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"mean_degree={mean_degree} not attainable with {n_nodes} nodes")
    rng = ensure_rng(seed)
    edges = []
    # row-by-row keeps memory at O(n) even for large populations
    for i in range(n_nodes - 1):
        hits = np.flatnonzero(rng.random(n_nodes - 1 - i) < p)
        edges.extend((i, int(i + 1 + j)) for j in hits)
    return PopulationGraph(n_nodes, edges)
