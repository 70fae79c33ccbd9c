"""Simple undirected graphs and the first-order edge-adjacency expansion.

Graphs are immutable: a node count plus a canonically sorted tuple of
edges (u, v) with u < v. That canonical form is what the edge-list file
format stores and what gives the line-graph expansion stable node ids.
"""

from collections import Counter
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import DataFormatError

__all__ = [
    "Graph",
    "DegreeDistribution",
    "degree_distribution",
    "avg_clustering",
    "sgn1",
    "read_edgelist",
    "write_edgelist",
]


@dataclass(frozen=True)
class Graph:
    n: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 0:
            raise ValueError(f"node count must be a non-negative integer, got {self.n}")
        for u, v in self.edges:
            if u == v:
                raise ValueError(f"self-loop ({u}, {v}) not allowed")
            if not (0 <= u < v < self.n):
                raise ValueError(f"edge ({u}, {v}) out of range for n={self.n}")
        if list(self.edges) != sorted(set(self.edges)):
            raise ValueError("edges must be sorted and unique; use Graph.from_edges")

    @classmethod
    def from_edges(cls, n: int, pairs) -> "Graph":
        """Build a graph from any iterable of (u, v) pairs.

        Orientation and order do not matter; duplicates collapse.
        """
        canon = {(int(u), int(v)) if u < v else (int(v), int(u)) for u, v in pairs}
        return cls(n=n, edges=tuple(sorted(canon)))

    @property
    def m_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def neighbor_sets(self) -> tuple[frozenset, ...]:
        adj = [set() for _ in range(self.n)]
        for u, v in self.edges:
            adj[u].add(v)
            adj[v].add(u)
        return tuple(frozenset(s) for s in adj)

    @cached_property
    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=np.int64)
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg

    def degree(self, u: int) -> int:
        return int(self.degrees[u])


@dataclass(frozen=True)
class DegreeDistribution:
    """Degree -> node count, plus the total node count for normalizing."""

    counts: dict[int, int]
    n: int


def degree_distribution(g: Graph) -> DegreeDistribution:
    return DegreeDistribution(counts=dict(sorted(Counter(int(d) for d in g.degrees).items())), n=g.n)


def avg_clustering(g: Graph) -> float:
    """Mean local clustering coefficient.

    Per node: 2 * (edges among its neighbors) / (deg * (deg - 1)), defined
    as 0 for degrees below 2. Empty graphs raise ValueError.
    """
    if g.n == 0:
        raise ValueError("clustering undefined for an empty graph")
    nbrs = g.neighbor_sets
    total = 0.0
    for u in range(g.n):
        deg = len(nbrs[u])
        if deg < 2:
            continue
        links = 0
        for v in nbrs[u]:
            # count each neighbor pair once via the v < w ordering
            links += sum(1 for w in nbrs[u] if v < w and w in nbrs[v])
        total += 2.0 * links / (deg * (deg - 1))
    return total / g.n


def sgn1(g: Graph) -> Graph:
    """First-order structural expansion: the line graph.

    Nodes are g's edges in canonical sorted order (node i is g.edges[i]);
    two nodes are adjacent iff the underlying edges share an endpoint.
    Requires at least one edge.
    """
    if g.m_edges == 0:
        raise ValueError("expansion needs at least one edge")
    incident: list[list[int]] = [[] for _ in range(g.n)]
    for idx, (u, v) in enumerate(g.edges):
        incident[u].append(idx)
        incident[v].append(idx)
    pairs = set()
    for ids in incident:
        for i in range(len(ids)):
            for j in range(i + 1, len(ids)):
                pairs.add((ids[i], ids[j]))
    return Graph(n=g.m_edges, edges=tuple(sorted(pairs)))


def write_edgelist(g: Graph, path) -> None:
    """Write the canonical edge-list text format: 'n <count>' then 'u v' lines."""
    lines = [f"n {g.n}"]
    lines.extend(f"{u} {v}" for u, v in g.edges)
    Path(path).write_text("\n".join(lines) + "\n")


def read_edgelist(path) -> Graph:
    """Parse the edge-list format written by write_edgelist.

    Rejects malformed lines, self-loops, duplicate edges, and endpoints
    outside [0, n), reporting the 1-based line number. Edges may arrive in
    any order but each line must satisfy u < v; canonical files round-trip
    byte for byte.
    """
    p = Path(path)
    text = p.read_text()
    lines = text.splitlines()
    if not lines:
        raise DataFormatError("empty file", line=1, path=str(p))
    head = lines[0].split()
    if len(head) != 2 or head[0] != "n" or not head[1].isdigit():
        raise DataFormatError(f"expected header 'n <count>', got {lines[0]!r}", line=1, path=str(p))
    n = int(head[1])
    seen = set()
    for i, raw in enumerate(lines[1:], start=2):
        parts = raw.split()
        if len(parts) != 2:
            raise DataFormatError(f"expected 'u v', got {raw!r}", line=i, path=str(p))
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise DataFormatError(f"non-integer endpoint in {raw!r}", line=i, path=str(p)) from None
        if u == v:
            raise DataFormatError(f"self-loop {u}", line=i, path=str(p))
        if not (0 <= u < v):
            raise DataFormatError(f"edge ({u}, {v}) must satisfy 0 <= u < v", line=i, path=str(p))
        if v >= n:
            raise DataFormatError(f"endpoint {v} out of range for n={n}", line=i, path=str(p))
        if (u, v) in seen:
            raise DataFormatError(f"duplicate edge ({u}, {v})", line=i, path=str(p))
        seen.add((u, v))
    return Graph(n=n, edges=tuple(sorted(seen)))
