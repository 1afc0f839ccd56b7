"""Epsilon-net discretisation of length spaces and approximate AMLEs.

For a net Lambda of X (covering X and Y within eps, with Y-points of the net
covering Y), the graph G_eps joins net points at distance <= sqrt(eps).  The
boundary data restricted to the net is extended infinity-harmonically on
G_eps, and f*_eps evaluates that extension at the nearest point of a
maximal sqrt(eps)-separated subnet.

Shipped spaces: ``IntervalDomain``, ``RectDomain`` (convex, so the intrinsic
metric is Euclidean) and ``GraphComplexDomain`` (the unit complex of a graph
scaled by a constant, with the net equal to the vertices of a subdivision).
Compact spaces only; non-compact spaces would be handled by restricting to a
large ball around the comparison centre, which is not implemented.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra, shortest_path
from scipy.spatial import cKDTree

from . import _kernels
from .errors import InputError, InvariantViolation
from .graphs import SimplicialGraph, subdivide
from .harmonic import extend_inf_harmonic
from .targets import MetricTree, TreePoint

ADJ_SLACK = 1e-12  # absorbs rounding in grid coordinates when testing d <= sqrt(eps)


# ------------------------------------------------------------ boundary data
@dataclass(frozen=True)
class ConeData:
    """Real data x -> slope * |x - apex| + offset, carried by a one-edge tree.

    Values are offsets from the tree's first vertex, so the tree must be long
    enough to hold them.  The cone is its own AMLE away from the apex.
    """

    tree: MetricTree
    apex: tuple[float, ...]
    slope: float = 1.0
    offset: float = 0.0

    def __post_init__(self):
        if len(self.tree.edges) != 1:
            raise InputError("cone data needs a one-edge (interval) target")
        if self.slope < 0:
            raise InputError("cone slope must be non-negative")

    def real(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return self.slope * np.linalg.norm(x - np.asarray(self.apex, dtype=float), axis=1) + self.offset

    def point(self, r: float) -> TreePoint:
        length = self.tree.edges[0][2]
        if r < -1e-12 or r > length + 1e-12:
            raise InputError(f"cone value {r} outside the target interval [0, {length}]")
        return self.tree.edge_point(0, min(max(r, 0.0), length))

    def values(self, x: np.ndarray) -> list[TreePoint]:
        return [self.point(float(r)) for r in self.real(x)]

    def reference(self, x: np.ndarray) -> list[TreePoint]:
        return self.values(x)


@dataclass(frozen=True)
class AnchorData:
    """Tree data prescribed at finitely many points (which must be the Y-points of the space)."""

    tree: MetricTree
    anchors: tuple[tuple[tuple[float, ...], TreePoint], ...]

    def values(self, x: np.ndarray) -> list[TreePoint]:
        out = []
        for row in np.atleast_2d(x):
            for at, val in self.anchors:
                if np.max(np.abs(np.asarray(at) - row)) <= 1e-12:
                    out.append(val)
                    break
            else:
                raise InputError(f"no anchor value at {tuple(row)}")
        return out

    reference = None


# ------------------------------------------------------------------- spaces
class EuclideanDomain:
    """Convex subset of R^d with Y a finite union of axis-parallel segments and points."""

    dim: int

    def distances(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        return np.sqrt(((A[:, None, :] - B[None, :, :]) ** 2).sum(-1))

    def _with_extra(self, grid: np.ndarray) -> np.ndarray:
        extra = [np.asarray(p, dtype=float) for p in self.special_points()]
        if extra:
            tree = cKDTree(grid)
            new = [p for p in extra if tree.query(p)[0] > 1e-12]
            if new:
                grid = np.vstack([grid, np.unique(np.array(new), axis=0)])
        order = np.lexsort(grid.T[::-1])
        return grid[order]

    def net(self, eps: float):
        pts = self._with_extra(self.grid(eps))
        ids = [f"n{i:07d}" for i in range(len(pts))]
        return ids, pts, self.in_Y(pts)

    def adjacency(self, pts: np.ndarray, radius: float) -> tuple[np.ndarray, np.ndarray]:
        pairs = cKDTree(pts).query_pairs(radius + ADJ_SLACK, output_type="ndarray")
        n = len(pts)
        rows = np.r_[pairs[:, 0], pairs[:, 1]]
        cols = np.r_[pairs[:, 1], pairs[:, 0]]
        m = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
        m.sort_indices()
        return m.indptr.astype(np.int64), m.indices.astype(np.int64)

    def greedy_subnet(self, pts: np.ndarray, sep: float) -> np.ndarray:
        """Greedy maximal subset (in point order) with pairwise distances >= sep."""
        cells: dict[tuple, list[int]] = {}
        chosen = []
        keys = np.floor(pts / sep).astype(np.int64)
        offsets = np.array(np.meshgrid(*[[-1, 0, 1]] * pts.shape[1])).reshape(pts.shape[1], -1).T
        for i, (p, key) in enumerate(zip(pts, keys)):
            ok = True
            for off in offsets:
                for j in cells.get(tuple(key + off), ()):
                    if np.linalg.norm(pts[j] - p) < sep:
                        ok = False
                        break
                if not ok:
                    break
            if ok:
                chosen.append(i)
                cells.setdefault(tuple(key), []).append(i)
        return np.array(chosen, dtype=np.int64)

    def nearest(self, candidates: np.ndarray, queries: np.ndarray) -> np.ndarray:
        """Index (into candidates) of the nearest candidate, lowest index on ties."""
        k = min(4, len(candidates))
        d, j = cKDTree(candidates).query(queries, k=k)
        d, j = d.reshape(len(queries), k), j.reshape(len(queries), k)
        close = d <= d[:, :1] + 1e-12
        return np.where(close, j, np.iinfo(np.int64).max).min(axis=1)


class IntervalDomain(EuclideanDomain):
    """[lo, hi] with Y a finite set of points (default the two endpoints)."""

    dim = 1

    def __init__(self, lo: float = 0.0, hi: float = 1.0, Y: Sequence[float] | None = None):
        if not hi > lo:
            raise InputError("interval needs hi > lo")
        self.lo, self.hi = float(lo), float(hi)
        self.Y = tuple(float(y) for y in (Y if Y is not None else (lo, hi)))
        for y in self.Y:
            if not lo <= y <= hi:
                raise InputError(f"Y point {y} outside the interval")
        if not self.Y:
            raise InputError("Y is empty")

    @property
    def diameter(self) -> float:
        return self.hi - self.lo

    def grid(self, eps: float) -> np.ndarray:
        n = math.ceil((self.hi - self.lo) / eps - 1e-12)
        return (self.lo + (self.hi - self.lo) * np.arange(n + 1) / n)[:, None]

    def special_points(self):
        return [(y,) for y in self.Y]

    def in_Y(self, pts: np.ndarray) -> np.ndarray:
        return np.array([any(abs(p[0] - y) <= 1e-12 for y in self.Y) for p in pts], dtype=bool)

    def probe_points(self, n: int = 2001) -> np.ndarray:
        return np.linspace(self.lo, self.hi, n)[:, None]

    def y_probe_points(self) -> np.ndarray:
        return np.array([[y] for y in self.Y])


class RectDomain(EuclideanDomain):
    """Axis-parallel rectangle; Y is a union of boundary segments and points.

    By default Y is the whole boundary.  Segments are given as pairs of
    endpoints and must lie on a side of the rectangle.
    """

    dim = 2

    def __init__(
        self,
        bounds: Sequence[float] = (0.0, 0.0, 1.0, 0.5),
        arcs: Sequence[tuple[Sequence[float], Sequence[float]]] | None = None,
        points: Sequence[Sequence[float]] = (),
    ):
        x0, y0, x1, y1 = map(float, bounds)
        if not (x1 > x0 and y1 > y0):
            raise InputError("rectangle bounds must be x0,y0,x1,y1 with x1 > x0 and y1 > y0")
        self.bounds = (x0, y0, x1, y1)
        if arcs is None:
            c = [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]
            arcs = [(c[i], c[(i + 1) % 4]) for i in range(4)]
        self.arcs = []
        for a, b in arcs:
            a = tuple(map(float, a))
            b = tuple(map(float, b))
            on_side = (a[0] == b[0] and a[0] in (x0, x1)) or (a[1] == b[1] and a[1] in (y0, y1))
            if not on_side or not all(self._inside(p) for p in (a, b)):
                raise InputError(f"arc {a}-{b} is not a segment of a side")
            self.arcs.append((a, b))
        self.points = [tuple(map(float, p)) for p in points]
        for p in self.points:
            if not self._inside(p):
                raise InputError(f"Y point {p} outside the rectangle")
        if not self.arcs and not self.points:
            raise InputError("Y is empty")

    def _inside(self, p) -> bool:
        x0, y0, x1, y1 = self.bounds
        return x0 - 1e-12 <= p[0] <= x1 + 1e-12 and y0 - 1e-12 <= p[1] <= y1 + 1e-12

    @property
    def diameter(self) -> float:
        x0, y0, x1, y1 = self.bounds
        return math.hypot(x1 - x0, y1 - y0)

    def grid(self, eps: float) -> np.ndarray:
        # cell half-diagonal h / sqrt(2) stays below eps
        h = math.sqrt(2.0) * eps * 0.999
        x0, y0, x1, y1 = self.bounds
        nx = math.ceil((x1 - x0) / h)
        ny = math.ceil((y1 - y0) / h)
        xs = x0 + (x1 - x0) * np.arange(nx + 1) / nx
        ys = y0 + (y1 - y0) * np.arange(ny + 1) / ny
        X, Yg = np.meshgrid(xs, ys, indexing="ij")
        return np.column_stack([X.ravel(), Yg.ravel()])

    def special_points(self):
        return [p for a, b in self.arcs for p in (a, b)] + list(self.points)

    def _arc_dist(self, pts: np.ndarray, a, b) -> np.ndarray:
        a = np.asarray(a)
        b = np.asarray(b)
        ab = b - a
        denom = float(ab @ ab)
        t = np.clip(((pts - a) @ ab) / denom, 0, 1) if denom > 0 else np.zeros(len(pts))
        return np.linalg.norm(pts - (a + t[:, None] * ab), axis=1)

    def in_Y(self, pts: np.ndarray) -> np.ndarray:
        mask = np.zeros(len(pts), dtype=bool)
        for a, b in self.arcs:
            mask |= self._arc_dist(pts, a, b) <= 1e-12
        for p in self.points:
            mask |= np.linalg.norm(pts - np.asarray(p), axis=1) <= 1e-12
        return mask

    def probe_points(self, n: int = 101) -> np.ndarray:
        x0, y0, x1, y1 = self.bounds
        ny = max(2, int(round(n * (y1 - y0) / (x1 - x0))))
        X, Yg = np.meshgrid(np.linspace(x0, x1, n), np.linspace(y0, y1, ny), indexing="ij")
        return np.column_stack([X.ravel(), Yg.ravel()])

    def y_probe_points(self, per_arc: int = 400) -> np.ndarray:
        out = [np.asarray(a) + np.linspace(0, 1, per_arc)[:, None] * (np.asarray(b) - np.asarray(a)) for a, b in self.arcs]
        out += [np.asarray([p]) for p in self.points]
        return np.vstack(out)


class GraphComplexDomain:
    """Unit complex of a graph scaled so that each edge has length ``spacing * subdivisions``.

    The net is the vertex set of the ``subdivisions``-fold subdivision, so
    with ``spacing`` in (sqrt(eps)/2, min(sqrt(eps), 2 eps)] the graph G_eps is
    exactly that subdivision.  Y is the vertex set ``omega``.
    """

    def __init__(self, graph: SimplicialGraph, omega: Iterable[str], spacing: float = 0.18, subdivisions: int = 1):
        if graph.loops:
            raise InputError("complex domains need a graph without self-loops")
        if subdivisions not in (1, 2):
            raise InputError("only 1 or 2 subdivisions are supported")
        self.graph = graph
        self.omega = frozenset(omega)
        for v in self.omega:
            graph._check(v)
        if not self.omega:
            raise InputError("Y is empty")
        self.spacing = float(spacing)
        self.subdivisions = subdivisions
        self.fine = graph if subdivisions == 1 else subdivide(graph)[0]
        self._hops = self.fine.distance_matrix()

    @property
    def diameter(self) -> float:
        return float(self._hops.max()) * self.spacing

    def net(self, eps: float):
        ids = list(self.fine.vertices)
        return ids, None, np.array([v in self.omega for v in ids], dtype=bool)

    def distances_idx(self, I: np.ndarray, J: np.ndarray) -> np.ndarray:
        return self._hops[np.ix_(I, J)] * self.spacing

    def adjacency(self, n: int, radius: float) -> tuple[np.ndarray, np.ndarray]:
        A = (self._hops * self.spacing <= radius + ADJ_SLACK) & (self._hops > 0)
        m = csr_matrix(A.astype(float))
        m.sort_indices()
        return m.indptr.astype(np.int64), m.indices.astype(np.int64)

    def greedy_subnet(self, sep: float) -> np.ndarray:
        D = self._hops * self.spacing
        chosen: list[int] = []
        for i in range(len(D)):
            if all(D[i, j] >= sep for j in chosen):
                chosen.append(i)
        return np.array(chosen, dtype=np.int64)

    def probe_points(self) -> list[str]:
        """Probes are the net vertices themselves (ids, not coordinates)."""
        return list(self.fine.vertices)

    def covering_radius(self) -> float:
        """Largest distance from a complex point to the net (midpoints of fine edges)."""
        return self.spacing / 2


# ----------------------------------------------------------------- net graph
@dataclass
class NetGraph:
    space: object
    eps: float
    ids: list[str]
    coords: np.ndarray | None
    in_Y: np.ndarray
    indptr: np.ndarray
    indices: np.ndarray
    subnet: np.ndarray

    @property
    def size(self) -> int:
        return len(self.ids)

    @property
    def radius(self) -> float:
        return math.sqrt(self.eps)

    def csr(self) -> csr_matrix:
        n = self.size
        return csr_matrix((np.ones(len(self.indices)), self.indices, self.indptr), shape=(n, n))

    def distances(self, I: np.ndarray, J: np.ndarray) -> np.ndarray:
        """d_X between net points given by index arrays."""
        if self.coords is None:
            return self.space.distances_idx(I, J)
        return self.space.distances(self.coords[I], self.coords[J])

    def graph(self) -> SimplicialGraph:
        edges = []
        for i in range(self.size):
            for j in self.indices[self.indptr[i]:self.indptr[i + 1]]:
                if i < j:
                    edges.append((self.ids[i], self.ids[j]))
        return SimplicialGraph(self.ids, edges)


def build_net(space, eps: float) -> NetGraph:
    """Net, sqrt(eps)-adjacency graph and greedy sqrt(eps)-separated subnet."""
    if not 0.0 < eps < 0.25:
        raise InputError(f"eps={eps} outside (0, 1/4)")
    ids, coords, in_Y = space.net(eps)
    if not in_Y.any():
        raise InputError("no net point lies in Y")
    r = math.sqrt(eps)
    if coords is None:
        indptr, indices = space.adjacency(len(ids), r)
        sub = space.greedy_subnet(r)
    else:
        indptr, indices = space.adjacency(coords, r)
        sub = space.greedy_subnet(coords, r)
    return NetGraph(space, eps, ids, coords, in_Y, indptr, indices, sub)


def covering_error(net: NetGraph) -> tuple[float, float]:
    """(sup over probes of X of the distance to the net, same for Y and the net's Y-points)."""
    space = net.space
    if net.coords is None:
        r = space.covering_radius()
        return r, 0.0
    dx, _ = cKDTree(net.coords).query(space.probe_points())
    dy, _ = cKDTree(net.coords[net.in_Y]).query(space.y_probe_points())
    return float(dx.max()), float(dy.max())


def _even_sample(idx: np.ndarray, k: int) -> np.ndarray:
    if len(idx) <= k:
        return idx
    return idx[np.linspace(0, len(idx) - 1, k).round().astype(int)]


def _hops_from(net: NetGraph, sources: np.ndarray) -> np.ndarray:
    return shortest_path(net.csr(), method="D", unweighted=True, indices=sources)


@dataclass(frozen=True)
class MetricApprox:
    discrepancy: float
    constant: float
    pairs: int


def metric_approx_error(net: NetGraph, sources: np.ndarray | None = None, targets: np.ndarray | None = None, n_sources: int = 16) -> MetricApprox:
    """max |d_G(x, y) sqrt(eps) - d_X(x, y)| over sources x (default: evenly
    spaced subnet points) and targets y (default: all net points)."""
    src = _even_sample(net.subnet, n_sources) if sources is None else np.asarray(sources)
    tgt = np.arange(net.size) if targets is None else np.asarray(targets)
    H = _hops_from(net, src)[:, tgt]
    if np.isinf(H).any():
        raise InputError("G_eps is disconnected; eps is too large for this space")
    disc = float(np.abs(H * net.radius - net.distances(src, tgt)).max())
    return MetricApprox(disc, disc / net.radius, H.size)


# ------------------------------------------------------------------ solving
@dataclass
class NetSolution:
    net: NetGraph
    tree: MetricTree
    values: list[TreePoint]
    solver: str
    sweeps: int = 0
    residual: float = 0.0


def _boundary_values(net: NetGraph, data) -> dict[int, TreePoint]:
    Yi = np.nonzero(net.in_Y)[0]
    if net.coords is None:
        vals = [data[net.ids[i]] for i in Yi]
    else:
        vals = data.values(net.coords[Yi])
    return dict(zip(Yi.tolist(), vals))


def solve_net(net: NetGraph, data, solver: str = "auto", tol: float = 1e-11, max_sweeps: int = 1_000_000) -> NetSolution:
    """Infinity-harmonic extension of the boundary data to all net points.

    ``exact`` runs the constructive extension on G_eps; ``relax`` runs
    Gauss-Seidel sweeps (each free value becomes the centre of its
    neighbours' values) until a sweep changes no value by more than ``tol``.
    ``auto`` picks exact for graph complexes and relax otherwise.  ``data``
    is boundary data for Euclidean spaces, or a vertex -> point mapping for
    graph complexes.
    """
    tree = _tree_of(data)
    if solver == "auto":
        solver = "exact" if net.coords is None else "relax"
    bvals = _boundary_values(net, data)
    if solver == "exact":
        G = net.graph()
        ext = extend_inf_harmonic(G, tree, {net.ids[i]: v for i, v in bvals.items()})
        return NetSolution(net, tree, [ext.values[v] for v in net.ids], "exact")
    if solver != "relax":
        raise InputError(f"unknown solver {solver!r}")

    fixed = np.zeros(net.size, dtype=np.bool_)
    fixed[list(bvals)] = True
    # start from the value of a graph-nearest Y point
    Yi = np.array(sorted(bvals), dtype=np.int64)
    _, _, src = dijkstra(net.csr(), indices=Yi, unweighted=True, min_only=True, return_predecessors=True)
    if (src < 0).any():
        raise InputError("some net point cannot reach Y in G_eps")
    if len(tree.edges) == 1:
        vals = np.array([_offset(tree, bvals[int(s)]) for s in src])
        sweeps, res = _kernels.relax_midrange(net.indptr, net.indices, fixed, vals, tol, max_sweeps)
        pts = [tree.edge_point(0, min(max(float(v), 0.0), tree.edges[0][2])) for v in vals]
    else:
        coords = [tree.to_edge_coords(bvals[int(s)]) for s in src]
        ve = np.array([c[0] for c in coords], dtype=np.int64)
        vs = np.array([c[1] for c in coords], dtype=float)
        sweeps, res = _kernels.relax_tree(net.indptr, net.indices, fixed, ve, vs, *tree.kernel_arrays(), tol, max_sweeps)
        pts = [tree.edge_point(int(e), min(max(float(s), 0.0), tree.edges[e][2])) for e, s in zip(ve, vs)]
    for i, v in bvals.items():
        pts[i] = v
    if res >= tol:
        raise InvariantViolation(f"relaxation did not converge in {max_sweeps} sweeps (last change {res})")
    return NetSolution(net, tree, pts, "relax", int(sweeps), float(res))


def _tree_of(data: Mapping) -> MetricTree:
    tree = getattr(data, "tree", None)
    if tree is None:
        raise InputError("boundary data must carry its target tree (use ComplexData for complexes)")
    return tree


def _offset(tree: MetricTree, p: TreePoint) -> float:
    if p.vertex is None:
        return p.offset
    return 0.0 if p.vertex == tree.edges[0][0] else tree.edges[0][2]


class ComplexData(dict):
    """Vertex -> tree point mapping that remembers its tree (boundary data on a complex)."""

    def __init__(self, tree: MetricTree, values: Mapping[str, TreePoint]):
        super().__init__(values)
        self.tree = tree


# ------------------------------------------------------------- approximations
@dataclass(frozen=True)
class LipCheck:
    observed: float
    bound: float
    lip_Y: float
    constant: float

    @property
    def ok(self) -> bool:
        return self.observed <= self.bound + 1e-6


def lip_bound_check(sol: NetSolution, n_sources: int = 16) -> LipCheck:
    """Lipschitz constant of the net extension on sampled subnet pairs versus
    Lip_Y(f) * (1 + C), with C the observed metric discrepancy / sqrt(eps)
    on the same pairs."""
    net = sol.net
    tree = sol.tree
    sub = net.subnet
    src = _even_sample(sub, n_sources)
    H = _hops_from(net, src)[:, sub]
    DX = net.distances(src, sub)
    C = float(np.abs(H * net.radius - DX).max() / net.radius)
    DT = tree.pairwise_distances([sol.values[i] for i in src], [sol.values[i] for i in sub])
    with np.errstate(divide="ignore", invalid="ignore"):
        obs = float(np.where(DX > 0, DT / DX, 0.0).max())
    Yi = np.nonzero(net.in_Y)[0]
    DY = net.distances(Yi, Yi)
    TY = tree.pairwise_distances([sol.values[i] for i in Yi])
    with np.errstate(divide="ignore", invalid="ignore"):
        lipY = float(np.where(DY > 0, TY / DY, 0.0).max())
    return LipCheck(obs, lipY * (1 + C), lipY, C)


@dataclass
class ApproxAmle:
    """f*_eps: values of the net extension read off at the nearest subnet point."""

    solution: NetSolution
    tree: MetricTree
    lip: LipCheck

    def nearest_subnet(self, queries) -> np.ndarray:
        net = self.solution.net
        sub = net.subnet
        if net.coords is None:
            q = np.array([net.ids.index(v) for v in queries], dtype=np.int64)
            D = net.distances(q, sub)
            return sub[np.argmin(D + 0.0, axis=1)]
        return sub[net.space.nearest(net.coords[sub], np.atleast_2d(np.asarray(queries, dtype=float)))]

    def __call__(self, queries) -> list[TreePoint]:
        return [self.solution.values[i] for i in self.nearest_subnet(queries)]


def approximate_amle(net: NetGraph, data, solver: str = "auto", check: bool = True) -> ApproxAmle:
    sol = solve_net(net, data, solver)
    tree = sol.tree
    lip = lip_bound_check(sol)
    if check and not lip.ok:
        raise InvariantViolation(f"net Lipschitz bound fails: {lip.observed} > {lip.bound}")
    return ApproxAmle(sol, tree, lip)


# ------------------------------------------------------------------ reports
@dataclass
class ReportRow:
    eps: float
    net_size: int
    subnet_size: int
    metric_discrepancy: float
    metric_constant: float
    lip_observed: float
    lip_bound: float
    sup_error_or_cauchy: float
    sweeps: int

    def to_json(self) -> dict:
        return self.__dict__.copy()


CSV_COLUMNS = ("epsilon", "net_size", "metric_discrepancy", "lip_bound", "sup_error_or_cauchy")


def convergence_report(
    space,
    data,
    epsilons: Sequence[float],
    probes: np.ndarray | None = None,
    reference: Callable | None | bool = True,
    solver: str = "auto",
    log: Callable[[str], None] | None = None,
) -> list[ReportRow]:
    """Per-eps diagnostics of f*_eps on a probe set.

    With a reference (default: ``data.reference`` when available, e.g. cone
    data) the last column is sup_p d_T(f*_eps(p), ref(p)); otherwise it is
    the sup-distance to the previous eps (NaN on the first row).
    """
    eps_list = [float(e) for e in epsilons]
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise InputError("epsilons must be strictly decreasing")
    if probes is None:
        probes = space.probe_points()
    if reference is True:
        reference = getattr(data, "reference", None)
    ref_vals = reference(probes) if reference else None
    tree = data.tree
    rows = []
    prev = None
    for eps in eps_list:
        net = build_net(space, eps)
        approx = approximate_amle(net, data, solver)
        metric = metric_approx_error(net)
        vals = approx(probes)
        if ref_vals is not None:
            err = _sup_dist(tree, vals, ref_vals)
        else:
            err = math.nan if prev is None else _sup_dist(tree, vals, prev)
        prev = vals
        rows.append(
            ReportRow(
                eps, net.size, len(net.subnet), metric.discrepancy, metric.constant,
                approx.lip.observed, approx.lip.bound, err, approx.solution.sweeps,
            )
        )
        if log:
            log(f"eps={eps}: |net|={net.size} sweeps={approx.solution.sweeps} err={err:.6g}")
    return rows


def _sup_dist(tree: MetricTree, a: Sequence[TreePoint], b: Sequence[TreePoint]) -> float:
    return max(tree.distance(p, q) for p, q in zip(a, b))


def write_report_csv(rows: Sequence[ReportRow], fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([repr(r.eps), r.net_size, repr(r.metric_discrepancy), repr(r.lip_bound), repr(r.sup_error_or_cauchy)])
