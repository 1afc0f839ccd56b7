"""Finite connected graphs, their unit-edge complexes, and external distances."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .errors import InputError

INF = math.inf  # sentinel for "no admissible path"


def _norm_edge(u: str, v: str) -> tuple[str, str]:
    return (u, v) if u <= v else (v, u)


class SimplicialGraph:
    """Unweighted finite connected graph with string vertex ids.

    Vertices are kept in lexicographic order and adjacency lists are sorted,
    so every BFS below is deterministic.
    """

    def __init__(self, vertices: Iterable[str], edges: Iterable[tuple[str, str]], allow_self_loops: bool = False):
        verts = sorted({str(v) for v in vertices})
        if not verts:
            raise InputError("graph needs at least one vertex")
        self.vertices: tuple[str, ...] = tuple(verts)
        self.index = {v: i for i, v in enumerate(verts)}
        self.allow_self_loops = bool(allow_self_loops)
        es = set()
        loops = set()
        for e in edges:
            try:
                u, v = e
            except (TypeError, ValueError):
                raise InputError(f"malformed edge {e!r}") from None
            u, v = str(u), str(v)
            for w in (u, v):
                if w not in self.index:
                    raise InputError(f"edge ({u}, {v}) references unknown vertex {w!r}")
            if u == v:
                if not self.allow_self_loops:
                    raise InputError(f"self-loop at {u!r} (not allowed for this graph)")
                loops.add(u)
                continue
            es.add(_norm_edge(u, v))
        self.edges: tuple[tuple[str, str], ...] = tuple(sorted(es))
        self.loops: frozenset[str] = frozenset(loops)
        nbrs: dict[str, list[str]] = {v: [] for v in verts}
        for u, v in self.edges:
            nbrs[u].append(v)
            nbrs[v].append(u)
        self._nbrs = {v: tuple(sorted(ns)) for v, ns in nbrs.items()}
        if len(self.graph_distances_from(verts[0])) != len(verts):
            raise InputError("graph is not connected")

    # --------------------------------------------------------------- basics
    def __len__(self) -> int:
        return len(self.vertices)

    def __contains__(self, v) -> bool:
        return v in self.index

    def _check(self, v: str) -> None:
        if v not in self.index:
            raise InputError(f"unknown vertex {v!r}")

    def neighbors(self, v: str, include_loop: bool = False) -> tuple[str, ...]:
        """Sorted neighbours of v (v itself is included only for a flagged self-loop)."""
        self._check(v)
        ns = self._nbrs[v]
        if include_loop and v in self.loops:
            return tuple(sorted(ns + (v,)))
        return ns

    def has_edge(self, u: str, v: str) -> bool:
        if u == v:
            return u in self.loops
        return v in self._nbrs.get(u, ())

    def without_loops(self) -> "SimplicialGraph":
        if not self.loops:
            return self
        return SimplicialGraph(self.vertices, self.edges)

    # ------------------------------------------------------------ distances
    def graph_distances_from(self, x: str, blocked: frozenset[str] | set[str] = frozenset()) -> dict[str, int]:
        """BFS hop counts from x.  Edges with both ends in ``blocked`` are deleted."""
        dist = {x: 0}
        queue = deque([x])
        while queue:
            a = queue.popleft()
            a_in = a in blocked
            for b in self._nbrs[a]:
                if b in dist or (a_in and b in blocked):
                    continue
                dist[b] = dist[a] + 1
                queue.append(b)
        return dist

    def distance_matrix(self) -> np.ndarray:
        """All-pairs hop counts as floats, indexed by ``self.index``."""
        n = len(self.vertices)
        out = np.full((n, n), np.inf)
        for v in self.vertices:
            i = self.index[v]
            for w, d in self.graph_distances_from(v).items():
                out[i, self.index[w]] = d
        return out

    def to_json(self) -> dict:
        edges = [list(e) for e in self.edges] + [[v, v] for v in sorted(self.loops)]
        return {"vertices": list(self.vertices), "edges": edges, "allow_self_loops": self.allow_self_loops}

    @classmethod
    def from_json(cls, obj: Mapping) -> "SimplicialGraph":
        try:
            return cls(obj["vertices"], obj["edges"], bool(obj.get("allow_self_loops", False)))
        except (KeyError, TypeError) as exc:
            raise InputError(f"malformed graph description: {exc}") from None

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, SimplicialGraph)
            and self.vertices == other.vertices
            and self.edges == other.edges
            and self.loops == other.loops
        )

    def __hash__(self) -> int:
        return hash((self.vertices, self.edges, self.loops))

    def __repr__(self) -> str:
        return f"SimplicialGraph({len(self.vertices)} vertices, {len(self.edges)} edges)"


def graph_distance(G: SimplicialGraph, x: str, y: str) -> int:
    """Hop count of a shortest path from x to y."""
    G._check(x)
    G._check(y)
    return G.graph_distances_from(x)[y]


def external_distance(G: SimplicialGraph, omega: Iterable[str], x: str, y: str) -> float:
    """Length of a shortest path from x to y none of whose steps joins two vertices of omega.

    Returns ``INF`` when no such path exists and 0 when ``x == y``.
    """
    G._check(x)
    G._check(y)
    blocked = frozenset(omega)
    for w in blocked:
        G._check(w)
    return G.graph_distances_from(x, blocked).get(y, INF)


def subdivide(G: SimplicialGraph) -> tuple[SimplicialGraph, dict[tuple[str, str], str]]:
    """Replace each edge uv by a path u - m - v.

    Returns the new graph and the map from (normalised) edges to midpoint ids.
    Midpoint ids are ``"u~v"``, suffixed with ``'`` until fresh.
    """
    if G.loops:
        raise InputError("cannot subdivide a graph with self-loops")
    used = set(G.vertices)
    mids: dict[tuple[str, str], str] = {}
    new_edges = []
    for u, v in G.edges:
        name = f"{u}~{v}"
        while name in used:
            name += "'"
        used.add(name)
        mids[(u, v)] = name
        new_edges += [(u, name), (name, v)]
    return SimplicialGraph(list(used), new_edges), mids


@dataclass(frozen=True)
class GraphPoint:
    """Point of the unit-edge complex.

    ``vertex`` set for vertex points; otherwise ``edge = (u, v)`` with u < v and
    ``offset`` in (0, 1) measured from u.  Use :func:`graph_point` to build.
    """

    vertex: str | None = None
    edge: tuple[str, str] | None = None
    offset: float = 0.0


def graph_point(G: SimplicialGraph, u: str, v: str | None = None, offset: float = 0.0) -> GraphPoint:
    """Canonical point at ``offset`` from u along uv (or the vertex u)."""
    G._check(u)
    if v is None:
        return GraphPoint(vertex=u)
    G._check(v)
    if u == v or not G.has_edge(u, v):
        raise InputError(f"no edge between {u!r} and {v!r}")
    offset = float(offset)
    if not (-1e-12 <= offset <= 1 + 1e-12):
        raise InputError(f"offset {offset} outside [0, 1]")
    if u > v:
        u, v, offset = v, u, 1.0 - offset
    if offset <= 1e-12:
        return GraphPoint(vertex=u)
    if offset >= 1 - 1e-12:
        return GraphPoint(vertex=v)
    return GraphPoint(edge=(u, v), offset=offset)
