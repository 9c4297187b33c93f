"""Finite windows of locally finite graphs.

Vertices are dense integer ids ``0..n-1``; adjacency lists are sorted tuples
so every iteration order (and therefore every RNG consumption order) is
deterministic.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

__all__ = [
    "Graph",
    "Window",
    "UnknownVertexError",
    "two_step_graph",
    "neighborhood",
    "two_neighborhood",
    "set_neighborhood",
    "set_two_neighborhood",
    "graph_distance",
    "bfs_distances",
    "UNREACHABLE",
]

UNREACHABLE = -1


class UnknownVertexError(KeyError):
    pass


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph on vertices ``0..n-1``.

    Build it with :meth:`from_edges`; the constructor only validates.
    """

    n: int
    adj: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if len(self.adj) != self.n:
            raise ValueError("adjacency length does not match n")
        for v, nbrs in enumerate(self.adj):
            prev = -1
            for w in nbrs:
                if not 0 <= w < self.n:
                    raise ValueError(f"neighbor {w} of {v} outside vertex set")
                if w == v:
                    raise ValueError(f"self-loop at {v}")
                if w <= prev:
                    raise ValueError(f"adjacency of {v} not strictly sorted")
                prev = w
        for v, nbrs in enumerate(self.adj):
            for w in nbrs:
                if v not in self._adjset[w]:
                    raise ValueError(f"asymmetric edge {v}->{w}")

    @property
    def _adjset(self) -> tuple[frozenset, ...]:
        cached = self.__dict__.get("_adjset_cache")
        if cached is None:
            cached = tuple(frozenset(a) for a in self.adj)
            object.__setattr__(self, "_adjset_cache", cached)
        return cached

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]]) -> "Graph":
        nb: list[set[int]] = [set() for _ in range(n)]
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                raise ValueError(f"self-loop at {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u}, {v}) outside vertex set")
            nb[u].add(v)
            nb[v].add(u)
        return cls(n, tuple(tuple(sorted(s)) for s in nb))

    @classmethod
    def empty(cls, n: int) -> "Graph":
        return cls(n, tuple(() for _ in range(n)))

    @property
    def vertices(self) -> range:
        return range(self.n)

    def degree(self, v: int) -> int:
        self._check(v)
        return len(self.adj[v])

    def degrees(self) -> list[int]:
        return [len(a) for a in self.adj]

    def has_edge(self, u: int, v: int) -> bool:
        return v in self._adjset[u]

    def edges(self) -> list[tuple[int, int]]:
        """Edges ``(u, v)`` with ``u < v`` in lexicographic order."""
        return [(u, v) for u in range(self.n) for v in self.adj[u] if u < v]

    def subgraph(self, vertices: Iterable[int]) -> tuple["Graph", list[int]]:
        """Induced subgraph relabelled densely; returns it and the old ids."""
        keep = sorted(set(vertices))
        index = {v: i for i, v in enumerate(keep)}
        edges = [(index[u], index[v]) for u, v in self.edges() if u in index and v in index]
        return Graph.from_edges(len(keep), edges), keep

    def _check(self, v: int) -> None:
        if not hasattr(v, "__index__") or not 0 <= v < self.n:
            raise UnknownVertexError(v)

    # serialization -----------------------------------------------------

    def to_json(self) -> str:
        return json.dumps({"n": self.n, "edges": [list(e) for e in self.edges()]},
                          separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "Graph":
        data = json.loads(text)
        return cls.from_edges(int(data["n"]), data["edges"])


def two_step_graph(g: Graph) -> Graph:
    """Graph on the same vertices joining every pair at distance 1 or 2."""
    adj = []
    for v in range(g.n):
        s = set(g.adj[v])
        for w in g.adj[v]:
            s.update(g.adj[w])
        s.discard(v)
        adj.append(tuple(sorted(s)))
    return Graph(g.n, tuple(adj))


def neighborhood(g: Graph, v: int) -> tuple[int, ...]:
    """Closed neighborhood of ``v`` (contains ``v``), sorted."""
    g._check(v)
    return tuple(sorted((v, *g.adj[v])))


def two_neighborhood(g: Graph, v: int) -> tuple[int, ...]:
    """Vertices whose closed neighborhood meets that of ``v``, sorted."""
    g._check(v)
    s = {v}
    for w in g.adj[v]:
        s.add(w)
        s.update(g.adj[w])
    return tuple(sorted(s))


def set_neighborhood(g: Graph, vertices: Iterable[int]) -> frozenset[int]:
    out: set[int] = set()
    for v in vertices:
        out.update(neighborhood(g, v))
    return frozenset(out)


def set_two_neighborhood(g: Graph, vertices: Iterable[int]) -> frozenset[int]:
    out: set[int] = set()
    for v in vertices:
        out.update(two_neighborhood(g, v))
    return frozenset(out)


def bfs_distances(g: Graph, source: int) -> list[int]:
    """Hop distances from ``source``; unreachable vertices get ``UNREACHABLE``."""
    g._check(source)
    dist = [UNREACHABLE] * g.n
    dist[source] = 0
    q = deque([source])
    while q:
        u = q.popleft()
        for w in g.adj[u]:
            if dist[w] == UNREACHABLE:
                dist[w] = dist[u] + 1
                q.append(w)
    return dist


def graph_distance(g: Graph, u: int, v: int) -> int | None:
    """Shortest-path length, or ``None`` if ``v`` is unreachable from ``u``."""
    g._check(v)
    d = bfs_distances(g, u)[v]
    return None if d == UNREACHABLE else d


@dataclass(frozen=True)
class Window:
    """A finite core of vertices together with its 2-neighborhood closure.

    ``ambient`` holds every vertex whose state can be read or written by an
    update at a core vertex.
    """

    graph: Graph
    core: frozenset[int]
    ambient: frozenset[int] = field(init=False)

    def __post_init__(self):
        core = frozenset(int(v) for v in self.core)
        for v in core:
            self.graph._check(v)
        object.__setattr__(self, "core", core)
        object.__setattr__(self, "ambient", set_two_neighborhood(self.graph, core))

    @classmethod
    def full(cls, g: Graph) -> "Window":
        return cls(g, frozenset(range(g.n)))
