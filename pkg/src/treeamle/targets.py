"""Metric target spaces.

``MetricTree`` is the main target: the 1-dimensional simplicial complex of a
finite tree with positive edge lengths, under the shortest-path metric.
``BoxTarget`` (l-infinity on R^d) is a second absolute 1-Lipschitz retract,
and ``PlaneTarget`` (Euclidean R^2) is only used by checkers.

All three implement the same small duck-typed interface::

    distance(p, q) -> float
    geodesic_point(p, q, lam) -> point
    ball_intersection_witness([(center, radius), ...]) -> point | None
    pairwise_distances(ps, qs=None) -> ndarray
    point_to_json(p) / point_from_json(obj)
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Protocol, Sequence

import numpy as np

from .errors import InputError, UnsupportedOperation

TOL = 1e-9
SNAP = 1e-12


class TargetSpace(Protocol):
    def distance(self, p, q) -> float: ...

    def geodesic_point(self, p, q, lam: float): ...

    def ball_intersection_witness(self, balls: Sequence[tuple]): ...

    def pairwise_distances(self, ps, qs=None) -> np.ndarray: ...

    def point_to_json(self, p): ...

    def point_from_json(self, obj): ...


@dataclass(frozen=True)
class TreePoint:
    """A point of a metric tree in canonical form.

    Vertex points carry ``vertex`` (and ``edge is None``); interior points
    carry ``edge`` (index into ``MetricTree.edges``) and ``offset`` measured
    from the edge's first endpoint, strictly inside ``(0, length)``.
    Build them through ``MetricTree.vertex_point`` / ``MetricTree.edge_point``
    so that equality of points is field equality.
    """

    vertex: str | None = None
    edge: int | None = None
    offset: float = 0.0

    @property
    def is_vertex(self) -> bool:
        return self.vertex is not None

    def __repr__(self) -> str:
        if self.vertex is not None:
            return f"TreePoint({self.vertex!r})"
        return f"TreePoint(edge={self.edge}, offset={self.offset!r})"


def _check_lambda(lam: float) -> float:
    lam = float(lam)
    if not (0.0 <= lam <= 1.0) or math.isnan(lam):
        raise InputError(f"interpolation parameter {lam} outside [0, 1]")
    return lam


class MetricTree:
    """Finite metric tree.

    Parameters
    ----------
    vertices : iterable of str
    edges : iterable of ``(u, v, length)``; edge ids are positions in this list.
    """

    def __init__(self, vertices: Iterable[str], edges: Iterable[tuple[str, str, float]]):
        verts = [str(v) for v in vertices]
        if len(set(verts)) != len(verts):
            raise InputError("duplicate tree vertex")
        if not verts:
            raise InputError("a metric tree needs at least one vertex")
        self.vertices: tuple[str, ...] = tuple(verts)
        self._vidx = {v: i for i, v in enumerate(self.vertices)}

        es = []
        seen = set()
        for u, v, length in edges:
            u, v, length = str(u), str(v), float(length)
            if u not in self._vidx or v not in self._vidx:
                raise InputError(f"edge ({u}, {v}) references an unknown vertex")
            if u == v:
                raise InputError(f"self-loop at {u}")
            if not (length > 0.0) or math.isinf(length):
                raise InputError(f"edge ({u}, {v}) has non-positive length {length}")
            key = frozenset((u, v))
            if key in seen:
                raise InputError(f"parallel edge ({u}, {v})")
            seen.add(key)
            es.append((u, v, length))
        if len(es) != len(verts) - 1:
            raise InputError("a tree on n vertices has exactly n - 1 edges")
        self.edges: tuple[tuple[str, str, float], ...] = tuple(es)
        self._edge_of = {frozenset((u, v)): i for i, (u, v, _) in enumerate(es)}

        n = len(verts)
        adj: list[list[tuple[int, float]]] = [[] for _ in range(n)]
        for u, v, length in es:
            iu, iv = self._vidx[u], self._vidx[v]
            adj[iu].append((iv, length))
            adj[iv].append((iu, length))
        # dist[a, b] and nxt[a, b] = neighbour of a on the arc towards b
        dist = np.full((n, n), np.inf)
        nxt = np.full((n, n), -1, dtype=np.int64)
        for src in range(n):
            dist[src, src] = 0.0
            nxt[src, src] = src
            queue = deque([src])
            while queue:
                a = queue.popleft()
                for b, length in adj[a]:
                    if dist[src, b] == np.inf:
                        dist[src, b] = dist[src, a] + length
                        # walking from b back towards src starts at a
                        nxt[b, src] = a
                        queue.append(b)
        if np.isinf(dist).any():
            raise InputError("tree is not connected")
        self._dist = dist
        self._next = nxt
        self._adj = adj

    # ------------------------------------------------------------------ points
    def vertex_point(self, v: str) -> TreePoint:
        if v not in self._vidx:
            raise InputError(f"unknown tree vertex {v!r}")
        return TreePoint(vertex=v)

    def edge_point(self, edge: int, offset: float) -> TreePoint:
        """Point at ``offset`` from the first endpoint of ``edges[edge]``."""
        if not isinstance(edge, (int, np.integer)) or not 0 <= edge < len(self.edges):
            raise InputError(f"invalid edge id {edge!r}")
        u, v, length = self.edges[edge]
        offset = float(offset)
        if math.isnan(offset) or offset < -SNAP or offset > length + SNAP:
            raise InputError(f"offset {offset} outside [0, {length}] on edge {edge}")
        if offset <= SNAP:
            return TreePoint(vertex=u)
        if offset >= length - SNAP:
            return TreePoint(vertex=v)
        return TreePoint(edge=int(edge), offset=offset)

    def point_between(self, u: str, v: str, offset: float) -> TreePoint:
        """Point at ``offset`` from ``u`` along the edge ``uv`` (either orientation)."""
        idx = self.edge_id(u, v)
        a, _, length = self.edges[idx]
        return self.edge_point(idx, offset if a == u else length - offset)

    def edge_id(self, u: str, v: str) -> int:
        try:
            return self._edge_of[frozenset((u, v))]
        except KeyError:
            raise InputError(f"no tree edge between {u!r} and {v!r}") from None

    def validate(self, p: TreePoint) -> TreePoint:
        if not isinstance(p, TreePoint):
            raise InputError(f"not a tree point: {p!r}")
        if p.vertex is not None:
            if p.vertex not in self._vidx:
                raise InputError(f"unknown tree vertex {p.vertex!r}")
            return p
        canon = self.edge_point(p.edge, p.offset)
        if canon != p:
            raise InputError(f"tree point {p!r} is not in canonical form")
        return p

    def _exits(self, p: TreePoint) -> tuple[tuple[int, float], ...]:
        """(vertex index, distance) pairs through which any arc leaves ``p``."""
        if p.vertex is not None:
            try:
                return ((self._vidx[p.vertex], 0.0),)
            except KeyError:
                raise InputError(f"unknown tree vertex {p.vertex!r}") from None
        if p.edge is None or not 0 <= p.edge < len(self.edges):
            raise InputError(f"invalid tree point {p!r}")
        u, v, length = self.edges[p.edge]
        if not 0.0 < p.offset < length:
            raise InputError(f"offset {p.offset} outside edge {p.edge}")
        return ((self._vidx[u], p.offset), (self._vidx[v], length - p.offset))

    # ---------------------------------------------------------------- metric
    def distance(self, p: TreePoint, q: TreePoint) -> float:
        if p == q:
            self._exits(p)
            return 0.0
        if p.edge is not None and p.edge == q.edge:
            self._exits(p), self._exits(q)
            return abs(p.offset - q.offset)
        best = math.inf
        for a, da in self._exits(p):
            row = self._dist[a]
            for b, db in self._exits(q):
                d = da + row[b] + db
                if d < best:
                    best = d
        return float(best)

    def vertex_distance(self, u: str, v: str) -> float:
        return float(self._dist[self._vidx[u], self._vidx[v]])

    @property
    def diameter(self) -> float:
        return float(self._dist.max()) if len(self.vertices) > 1 else 0.0

    def encode(self, points: Sequence[TreePoint]) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Arrays ``(a, da, b, db, edge)`` describing the two exits of each point.

        ``edge`` is -1 for vertex points (whose two exits coincide).
        """
        n = len(points)
        a = np.empty(n, dtype=np.int64)
        b = np.empty(n, dtype=np.int64)
        da = np.zeros(n)
        db = np.zeros(n)
        edge = np.full(n, -1, dtype=np.int64)
        for i, p in enumerate(points):
            ex = self._exits(p)
            a[i], da[i] = ex[0]
            b[i], db[i] = ex[-1]
            if p.vertex is None:
                edge[i] = p.edge
        return a, da, b, db, edge

    def pairwise_distances(self, ps: Sequence[TreePoint], qs: Sequence[TreePoint] | None = None) -> np.ndarray:
        """Distance matrix between two lists of points, vectorised."""
        P = self.encode(ps)
        Q = P if qs is None else self.encode(qs)
        return _anchor_distances(P, Q, self._dist)

    # ------------------------------------------------------------- geodesics
    def _arc(self, p: TreePoint, q: TreePoint) -> list[TreePoint]:
        """Breakpoints of the arc from p to q: p, the tree vertices crossed, q."""
        if p.edge is not None and p.edge == q.edge:
            return [p, q]
        best = None
        for a, da in self._exits(p):
            for b, db in self._exits(q):
                d = da + self._dist[a, b] + db
                if best is None or d < best[0]:
                    best = (d, a, b)
        _, a, b = best
        pts = [p]
        cur = a
        while True:
            vp = TreePoint(vertex=self.vertices[cur])
            if vp != pts[-1]:
                pts.append(vp)
            if cur == b:
                break
            cur = int(self._next[cur, b])
        if q != pts[-1]:
            pts.append(q)
        return pts

    def _edge_coords(self, x: TreePoint, y: TreePoint) -> tuple[int, float, float]:
        """A common edge of two consecutive arc breakpoints and their offsets on it."""
        if x.edge is not None:
            e = x.edge
        elif y.edge is not None:
            e = y.edge
        else:
            e = self.edge_id(x.vertex, y.vertex)
        u, _, length = self.edges[e]

        def off(z: TreePoint) -> float:
            if z.vertex is None:
                return z.offset
            return 0.0 if z.vertex == u else length

        return e, off(x), off(y)

    def geodesic_point(self, p: TreePoint, q: TreePoint, lam: float) -> TreePoint:
        """Point r on the arc [p, q] with d(p, r) = lam * d(p, q)."""
        lam = _check_lambda(lam)
        if lam == 0.0:
            return self.validate(p)
        if lam == 1.0:
            return self.validate(q)
        total = self.distance(p, q)
        if total == 0.0:
            return p
        tau = lam * total
        arc = self._arc(p, q)
        walked = 0.0
        for x, y in zip(arc, arc[1:]):
            e, sx, sy = self._edge_coords(x, y)
            seg = abs(sy - sx)
            if tau <= walked + seg or y is arc[-1]:
                frac = min(max((tau - walked) / seg, 0.0), 1.0) if seg > 0 else 0.0
                return self.edge_point(e, sx + (sy - sx) * frac)
            walked += seg
        return q  # pragma: no cover

    def midpoint(self, p: TreePoint, q: TreePoint) -> TreePoint:
        return self.geodesic_point(p, q, 0.5)

    # ------------------------------------------------- ball intersections
    def minimize_excess(self, balls: Sequence[tuple[TreePoint, float]]) -> tuple[float, TreePoint]:
        """Exact minimum of phi(x) = max_i (d(x, c_i) - r_i) over the tree.

        Returns ``(min value, canonical minimiser)``.  Balls with infinite
        radius are ignored; if none remain, phi is identically -inf and the
        first endpoint of edge 0 is returned.
        """
        finite = []
        for c, r in balls:
            r = float(r)
            if math.isnan(r) or r < 0:
                raise InputError(f"invalid radius {r}")
            self._exits(c)
            if not math.isinf(r):
                finite.append((c, r))
        if not self.edges:
            p = TreePoint(vertex=self.vertices[0])
            if not finite:
                return -math.inf, p
            return max(-r for _, r in finite), p
        if not finite:
            return -math.inf, self.edge_point(0, 0.0)

        best: tuple[float, int, float] | None = None
        for e, (u, v, length) in enumerate(self.edges):
            iu, iv = self._vidx[u], self._vidx[v]
            up = -math.inf  # phi >= s + up
            down = -math.inf  # phi >= -s + down
            for c, r in finite:
                if c.vertex is None and c.edge == e:
                    up = max(up, -c.offset - r)
                    down = max(down, c.offset - r)
                    continue
                du = min(dx + self._dist[iu, k] for k, dx in self._exits(c))
                dv = min(dx + self._dist[iv, k] for k, dx in self._exits(c))
                if du <= dv:
                    up = max(up, du - r)
                else:
                    down = max(down, length + dv - r)
            if up == -math.inf:
                s, val = length, down - length
            elif down == -math.inf:
                s, val = 0.0, up
            else:
                s = min(max(0.5 * (down - up), 0.0), length)
                val = max(s + up, down - s)
            if best is None or val < best[0] - SNAP * max(1.0, abs(best[0])):
                best = (val, e, s)
        val, e, s = best
        return float(val), self.edge_point(e, s)

    def ball_intersection_witness(self, balls: Sequence[tuple[TreePoint, float]]) -> TreePoint | None:
        """A common point of closed balls, or ``None`` if they do not meet."""
        if not balls:
            raise InputError("ball intersection needs at least one ball")
        val, point = self.minimize_excess(balls)
        return point if val <= TOL else None

    def one_center(self, points: Sequence[TreePoint]) -> TreePoint:
        """Centre of the smallest ball containing ``points``."""
        return self.minimize_excess([(p, 0.0) for p in points])[1]

    def same_side(self, cut: TreePoint, a: TreePoint, b: TreePoint) -> bool:
        """True iff a and b lie in one component of the tree minus ``cut``."""
        if self.distance(a, cut) <= SNAP or self.distance(b, cut) <= SNAP:
            raise InputError("side-of-cut query with a point equal to the cut")
        through = self.distance(a, cut) + self.distance(cut, b)
        return not abs(self.distance(a, b) - through) <= TOL

    def kernel_arrays(self):
        """(eu, ev, lengths, vertex distances, next hop, edge id) for compiled code."""
        n = len(self.vertices)
        eu = np.array([self._vidx[u] for u, _, _ in self.edges], dtype=np.int64)
        ev = np.array([self._vidx[v] for _, v, _ in self.edges], dtype=np.int64)
        el = np.array([w for _, _, w in self.edges], dtype=float)
        eid = np.full((n, n), -1, dtype=np.int64)
        eid[eu, ev] = np.arange(len(self.edges))
        eid[ev, eu] = np.arange(len(self.edges))
        return eu, ev, el, self._dist, self._next, eid

    def to_edge_coords(self, p: TreePoint) -> tuple[int, float]:
        """(edge id, offset) with vertex points placed on their first incident edge."""
        if p.vertex is None:
            return p.edge, p.offset
        for e, (u, v, length) in enumerate(self.edges):
            if u == p.vertex:
                return e, 0.0
            if v == p.vertex:
                return e, length
        raise InputError("a one-vertex tree has no edges")

    # ----------------------------------------------------------------- misc
    def scaled(self, factor: float) -> "MetricTree":
        if not factor > 0:
            raise InputError("scale factor must be positive")
        return MetricTree(self.vertices, [(u, v, w * factor) for u, v, w in self.edges])

    def scale_point(self, p: TreePoint, factor: float) -> TreePoint:
        if p.vertex is not None:
            return p
        return TreePoint(edge=p.edge, offset=p.offset * factor)

    def to_json(self) -> dict:
        return {
            "vertices": list(self.vertices),
            "edges": [{"u": u, "v": v, "length": w} for u, v, w in self.edges],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "MetricTree":
        try:
            edges = [(e["u"], e["v"], e["length"]) for e in obj["edges"]]
            return cls(obj["vertices"], edges)
        except (KeyError, TypeError) as exc:
            raise InputError(f"malformed tree description: {exc}") from None

    def point_to_json(self, p: TreePoint) -> dict:
        if p.vertex is not None:
            return {"vertex": p.vertex}
        u, v, _ = self.edges[p.edge]
        return {"edge": [u, v], "offset": p.offset}

    def point_from_json(self, obj) -> TreePoint:
        if not isinstance(obj, dict):
            raise InputError(f"malformed tree point {obj!r}")
        if "vertex" in obj:
            return self.vertex_point(str(obj["vertex"]))
        try:
            u, v = obj["edge"]
            return self.point_between(str(u), str(v), float(obj["offset"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed tree point {obj!r}: {exc}") from None

    def __eq__(self, other) -> bool:
        return isinstance(other, MetricTree) and self.vertices == other.vertices and self.edges == other.edges

    def __hash__(self) -> int:
        return hash((self.vertices, self.edges))

    def __repr__(self) -> str:
        return f"MetricTree({len(self.vertices)} vertices, {len(self.edges)} edges)"


def _anchor_distances(P, Q, vd: np.ndarray) -> np.ndarray:
    """Distances between points given by two exits each (see MetricTree.encode).

    Also valid for unit-length graph complexes: two points on the same edge
    are at distance |s - t|, any other arc leaves through an endpoint.
    """
    pa, pda, pb, pdb, pe = P
    qa, qda, qb, qdb, qe = Q
    out = pda[:, None] + vd[np.ix_(pa, qa)] + qda[None, :]
    np.minimum(out, pda[:, None] + vd[np.ix_(pa, qb)] + qdb[None, :], out=out)
    np.minimum(out, pdb[:, None] + vd[np.ix_(pb, qa)] + qda[None, :], out=out)
    np.minimum(out, pdb[:, None] + vd[np.ix_(pb, qb)] + qdb[None, :], out=out)
    same = (pe[:, None] == qe[None, :]) & (pe[:, None] >= 0)
    if same.any():
        i, j = np.nonzero(same)
        out[i, j] = np.abs(pda[i] - qda[j])
    return out


def segment_tree(lo: float, hi: float) -> MetricTree:
    """The interval [lo, hi] as a one-edge metric tree (vertices 'lo', 'hi')."""
    if not hi > lo:
        raise InputError("segment needs hi > lo")
    tree = MetricTree(["lo", "hi"], [("lo", "hi", hi - lo)])
    tree.origin = float(lo)
    return tree


def real_point(tree: MetricTree, value: float) -> TreePoint:
    """Tree point of a real number on a ``segment_tree``."""
    lo = getattr(tree, "origin", 0.0)
    return tree.edge_point(0, float(value) - lo)


def real_value(tree: MetricTree, p: TreePoint) -> float:
    lo = getattr(tree, "origin", 0.0)
    if p.vertex is not None:
        return lo + (0.0 if p.vertex == tree.edges[0][0] else tree.edges[0][2])
    return lo + p.offset


# ----------------------------------------------------------------- l_inf box
class BoxTarget:
    """R^d with the max-coordinate norm; points are tuples of floats."""

    def __init__(self, dimension: int):
        if int(dimension) < 1:
            raise InputError("dimension must be positive")
        self.dimension = int(dimension)

    def _vec(self, p) -> np.ndarray:
        arr = np.asarray(p, dtype=float)
        if arr.shape != (self.dimension,):
            raise InputError(f"expected a {self.dimension}-vector, got {p!r}")
        return arr

    def point(self, coords) -> tuple[float, ...]:
        return tuple(float(c) for c in self._vec(coords))

    def distance(self, p, q) -> float:
        return float(np.max(np.abs(self._vec(p) - self._vec(q))))

    def geodesic_point(self, p, q, lam: float):
        lam = _check_lambda(lam)
        if lam == 0.0:
            return self.point(p)
        if lam == 1.0:
            return self.point(q)
        return self.point((1 - lam) * self._vec(p) + lam * self._vec(q))

    def ball_intersection_witness(self, balls):
        if not balls:
            raise InputError("ball intersection needs at least one ball")
        lo = np.full(self.dimension, -np.inf)
        hi = np.full(self.dimension, np.inf)
        for c, r in balls:
            c = self._vec(c)
            r = float(r)
            if math.isnan(r) or r < 0:
                raise InputError(f"invalid radius {r}")
            if math.isinf(r):
                continue
            lo = np.maximum(lo, c - r)
            hi = np.minimum(hi, c + r)
        if np.isinf(lo).any():
            # only infinite balls
            return self.point(self._vec(balls[0][0]))
        if (lo > hi + TOL).any():
            return None
        return self.point(np.where(lo > hi, lo, 0.5 * (lo + hi)))

    def pairwise_distances(self, ps, qs=None) -> np.ndarray:
        A = np.asarray(ps, dtype=float).reshape(len(ps), self.dimension)
        B = A if qs is None else np.asarray(qs, dtype=float).reshape(len(qs), self.dimension)
        return np.max(np.abs(A[:, None, :] - B[None, :, :]), axis=2)

    def point_to_json(self, p):
        return list(self.point(p))

    def point_from_json(self, obj):
        return self.point(obj)

    def to_json(self) -> dict:
        return {"type": "box", "dimension": self.dimension}


def box_ball_intersection(dimension: int, balls) -> tuple[float, ...] | None:
    """Coordinate-wise interval intersection of l_inf balls (midpoint witness)."""
    return BoxTarget(dimension).ball_intersection_witness(balls)


class PlaneTarget:
    """Euclidean plane.

    Geodesics are straight segments (unique), so linear interpolation is
    available for checkers; ball intersections are not.
    """

    dimension = 2

    def point(self, coords) -> tuple[float, float]:
        arr = np.asarray(coords, dtype=float)
        if arr.shape != (2,):
            raise InputError(f"expected a 2-vector, got {coords!r}")
        return (float(arr[0]), float(arr[1]))

    def distance(self, p, q) -> float:
        return float(math.hypot(p[0] - q[0], p[1] - q[1]))

    def geodesic_point(self, p, q, lam: float):
        lam = _check_lambda(lam)
        return self.point(((1 - lam) * p[0] + lam * q[0], (1 - lam) * p[1] + lam * q[1]))

    def ball_intersection_witness(self, balls):
        raise UnsupportedOperation("the Euclidean plane lacks the binary intersection property")

    def pairwise_distances(self, ps, qs=None) -> np.ndarray:
        A = np.asarray(ps, dtype=float).reshape(len(ps), 2)
        B = A if qs is None else np.asarray(qs, dtype=float).reshape(len(qs), 2)
        return np.hypot(A[:, None, 0] - B[None, :, 0], A[:, None, 1] - B[None, :, 1])

    def point_to_json(self, p):
        return list(self.point(p))

    def point_from_json(self, obj):
        return self.point(obj)

    def to_json(self) -> dict:
        return {"type": "plane"}


def target_from_json(obj: dict):
    kind = obj.get("type", "tree")
    if kind == "tree":
        return MetricTree.from_json(obj)
    if kind == "box":
        return BoxTarget(obj.get("dimension", 1))
    if kind == "plane":
        return PlaneTarget()
    raise InputError(f"unknown target type {kind!r}")


# functional aliases
def tree_distance(tree: MetricTree, p: TreePoint, q: TreePoint) -> float:
    return tree.distance(p, q)


def tree_geodesic_point(tree: MetricTree, p: TreePoint, q: TreePoint, lam: float) -> TreePoint:
    return tree.geodesic_point(p, q, lam)


def tree_ball_intersection(tree: MetricTree, balls) -> TreePoint | None:
    return tree.ball_intersection_witness(balls)


def tree_side_of_cut(tree: MetricTree, cut: TreePoint, a: TreePoint, b: TreePoint) -> bool:
    return tree.same_side(cut, a, b)
