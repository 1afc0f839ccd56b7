"""Linear interpolation to the unit-edge complex and AMLE verification.

Two independent verifiers are provided:

* ``is_amle_via_harmonicity`` subdivides the graph, fills midpoints with
  target midpoints and checks infinity-harmonicity (exact, local).
* ``is_amle_exhaustive`` enumerates vertex-generated open sets and compares
  sampled Lipschitz constants on the closure with those on the boundary.

``t_comparison_check`` is a falsifier for comparison with cones: it can find
violations but a pass certifies only the finite set of probes it tried.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import InputError, UnsupportedOperation
from .graphs import GraphPoint, SimplicialGraph, graph_point, subdivide
from .harmonic import HarmonicCheck, is_inf_harmonic_at
from .targets import MetricTree, PlaneTarget, _anchor_distances

DEFAULT_RESOLUTION = 16
DEFAULT_CAP = 14


class InterpolatedMap:
    """Vertex map into a geodesic target, extended along edge geodesics."""

    def __init__(self, graph: SimplicialGraph, target, values: Mapping[str, object]):
        if graph.loops:
            raise InputError("interpolation needs a graph without self-loops")
        missing = [v for v in graph.vertices if v not in values]
        if missing:
            raise InputError(f"vertex map undefined at {missing[:5]}")
        self.graph = graph
        self.target = target
        self.values = {v: values[v] for v in graph.vertices}
        self.edge_index = {e: i for i, e in enumerate(graph.edges)}
        self._vd = graph.distance_matrix()

    def __call__(self, x: GraphPoint):
        return self.evaluate(x)

    def evaluate(self, x: GraphPoint):
        if x.vertex is not None:
            if x.vertex not in self.values:
                raise InputError(f"unknown vertex {x.vertex!r}")
            return self.values[x.vertex]
        if x.edge not in self.edge_index:
            raise InputError(f"unknown edge {x.edge!r}")
        u, v = x.edge
        try:
            return self.target.geodesic_point(self.values[u], self.values[v], x.offset)
        except UnsupportedOperation as exc:
            raise InputError(str(exc)) from None

    def encode(self, points: Sequence[GraphPoint]):
        """Exit encoding of complex points (see ``MetricTree.encode``)."""
        idx = self.graph.index
        n = len(points)
        a = np.empty(n, dtype=np.int64)
        b = np.empty(n, dtype=np.int64)
        da = np.zeros(n)
        db = np.zeros(n)
        e = np.full(n, -1, dtype=np.int64)
        for i, p in enumerate(points):
            if p.vertex is not None:
                a[i] = b[i] = idx[p.vertex]
            else:
                a[i], b[i] = idx[p.edge[0]], idx[p.edge[1]]
                da[i], db[i] = p.offset, 1.0 - p.offset
                e[i] = self.edge_index[p.edge]
        return a, da, b, db, e

    def complex_distances(self, ps: Sequence[GraphPoint], qs: Sequence[GraphPoint] | None = None) -> np.ndarray:
        P = self.encode(ps)
        Q = P if qs is None else self.encode(qs)
        return _anchor_distances(P, Q, self._vd)


def interpolate_eval(F: InterpolatedMap, x: GraphPoint):
    return F.evaluate(x)


def complex_distance(F: InterpolatedMap, x: GraphPoint, y: GraphPoint) -> float:
    return float(F.complex_distances([x], [y])[0, 0])


def _ratio_matrix(F: InterpolatedMap, points: Sequence[GraphPoint]) -> np.ndarray:
    D = F.complex_distances(points)
    T = F.target.pairwise_distances([F.evaluate(p) for p in points])
    with np.errstate(divide="ignore", invalid="ignore"):
        R = np.where(D > 1e-12, T / D, 0.0)
    return R


def _edge_params(m: int) -> np.ndarray:
    return np.unique(np.r_[np.arange(m + 2) / (m + 1), 0.5])


def lip_over_region(F: InterpolatedMap, points: Iterable[GraphPoint], m: int = DEFAULT_RESOLUTION) -> float:
    """Sampled Lipschitz constant of F on a finite set of complex points.

    Every edge whose two endpoints are among the given vertex points is
    additionally sampled at ``m`` equispaced interior points and its midpoint.
    """
    pts = list(dict.fromkeys(points))
    if not pts:
        raise InputError("empty region")
    verts = {p.vertex for p in pts if p.vertex is not None}
    for u, v in F.graph.edges:
        if u in verts and v in verts:
            for lam in _edge_params(m)[1:-1]:
                pts.append(GraphPoint(edge=(u, v), offset=float(lam)))
    if len(pts) == 1:
        return 0.0
    return float(_ratio_matrix(F, pts).max())


@dataclass(frozen=True)
class Violation:
    """An open set on which the sampled Lipschitz constant exceeds the boundary one.

    ``half`` distinguishes the two shapes: the full open star of ``core``
    (boundary = neighbouring vertices) or its half-radius version
    (boundary = midpoints of edges leaving ``core``).
    """

    core: tuple[str, ...]
    half: bool
    lip_open: float
    lip_boundary: float

    def to_json(self) -> dict:
        return {
            "core": list(self.core),
            "shape": "half-star" if self.half else "star",
            "lip_open": self.lip_open,
            "lip_boundary": self.lip_boundary,
        }


@dataclass(frozen=True)
class AmleVerdict:
    ok: bool
    violation: Violation | None = None
    checked: int = 0
    harmonic_failure: HarmonicCheck | None = None

    def __bool__(self) -> bool:
        return self.ok


class _SampledComplex:
    """Ratio data precomputed once per map for the open-set enumeration.

    Each edge is split into a u-half and a v-half (both containing the
    midpoint).  ``half_block[i, j]`` is the largest sampled ratio between a
    point of half i and a point of half j; halves 2e and 2e+1 belong to edge e.
    """

    def __init__(self, F: InterpolatedMap, m: int):
        G = F.graph
        self.F = F
        lam = _edge_params(m)
        lo = np.nonzero(lam <= 0.5)[0]
        hi = np.nonzero(lam >= 0.5)[0]
        pts = []
        for u, v in G.edges:
            for s in lam:
                pts.append(graph_point(G, u, v, float(s)))
        R = _ratio_matrix(F, pts) if pts else np.zeros((0, 0))
        k = len(lam)
        E = len(G.edges)
        # index lists for the halves, all of equal length
        idx = np.concatenate([np.r_[e * k + lo, e * k + hi[::-1]] for e in range(E)]) if E else np.zeros(0, int)
        h = len(lo)
        sub = R[np.ix_(idx, idx)].reshape(2 * E, h, 2 * E, h) if E else np.zeros((0, 1, 0, 1))
        self.half_block = sub.max(axis=(1, 3)) if E else np.zeros((0, 0))

        verts = list(G.vertices)
        vd = F._vd
        vt = F.target.pairwise_distances([F.values[v] for v in verts])
        with np.errstate(divide="ignore", invalid="ignore"):
            self.vertex_ratio = np.where(vd > 0, vt / vd, 0.0)
        mids = [graph_point(G, u, v, 0.5) for u, v in G.edges]
        self.mid_ratio = _ratio_matrix(F, mids) if mids else np.zeros((0, 0))

        self.incident: dict[str, list[int]] = {v: [] for v in verts}
        for e, (u, v) in enumerate(G.edges):
            self.incident[u].append(e)
            self.incident[v].append(e)

    def lipschitz(self, core: frozenset[str], half: bool) -> tuple[float, float]:
        G = self.F.graph
        edges = sorted({e for v in core for e in self.incident[v]})
        if half:
            halves = []
            leaving = []
            for e in edges:
                u, v = G.edges[e]
                if u in core:
                    halves.append(2 * e)
                if v in core:
                    halves.append(2 * e + 1)
                if (u in core) != (v in core):
                    leaving.append(e)
            lip_open = float(self.half_block[np.ix_(halves, halves)].max())
            lip_bd = float(self.mid_ratio[np.ix_(leaving, leaving)].max()) if leaving else 0.0
        else:
            halves = [2 * e + j for e in edges for j in (0, 1)]
            lip_open = float(self.half_block[np.ix_(halves, halves)].max()) if halves else 0.0
            bd = sorted({w for v in core for w in G.neighbors(v)} - core)
            ii = [G.index[w] for w in bd]
            lip_bd = float(self.vertex_ratio[np.ix_(ii, ii)].max()) if ii else 0.0
        return lip_open, lip_bd


def open_set_lipschitz(F: InterpolatedMap, core: Iterable[str], m: int = DEFAULT_RESOLUTION, half: bool = False) -> tuple[float, float]:
    """(sampled Lip on the closure, Lip on the boundary) of the open set generated by ``core``."""
    core = frozenset(core)
    for v in core:
        F.graph._check(v)
    return _SampledComplex(F, m).lipschitz(core, half)


def is_amle_exhaustive(
    G: SimplicialGraph,
    omega: Iterable[str],
    F: InterpolatedMap,
    m: int = DEFAULT_RESOLUTION,
    tol: float = 1e-6,
    cap: int = DEFAULT_CAP,
) -> AmleVerdict:
    """Brute-force AMLE test over all vertex-generated open sets.

    For every nonempty S inside V minus omega (in increasing bitmask order
    over the sorted free vertices), both the open star of S and its
    half-radius version are tested; the first set with
    Lip(closure) > Lip(boundary) + tol is reported.
    """
    omega = frozenset(omega)
    free = [v for v in G.vertices if v not in omega]
    if len(free) > cap:
        raise InputError(
            f"{len(free)} free vertices exceed the exhaustive cap {cap}; use the harmonic mode instead"
        )
    if not free:
        return AmleVerdict(True, None, 0)
    data = _SampledComplex(F, m)
    checked = 0
    for mask in range(1, 1 << len(free)):
        core = frozenset(v for i, v in enumerate(free) if mask >> i & 1)
        for half in (False, True):
            lip_open, lip_bd = data.lipschitz(core, half)
            checked += 1
            if lip_open > lip_bd + tol:
                return AmleVerdict(False, Violation(tuple(sorted(core)), half, lip_open, lip_bd), checked)
    return AmleVerdict(True, None, checked)


def subdivided_map(G: SimplicialGraph, target, values: Mapping[str, object]):
    """Subdivision of G with midpoints mapped to target midpoints."""
    H, mids = subdivide(G)
    out = dict(values)
    for (u, v), name in mids.items():
        out[name] = target.geodesic_point(values[u], values[v], 0.5)
    return H, out


def is_amle_via_harmonicity(
    G: SimplicialGraph, omega: Iterable[str], target, values: Mapping[str, object], tol: float = 1e-9
) -> AmleVerdict:
    """AMLE certificate for the linear interpolation via harmonicity after subdivision.

    The certificate is only sound for tree targets; other targets raise
    ``UnsupportedOperation`` (the plane example is harmonic after
    subdivision without being an AMLE).
    """
    if not isinstance(target, MetricTree):
        raise UnsupportedOperation("the harmonic certificate needs a tree target; use the exhaustive mode")
    omega = frozenset(omega)
    H, sub = subdivided_map(G, target, values)
    for v in H.vertices:
        if v in omega:
            continue
        chk = is_inf_harmonic_at(H, target, sub, v, tol)
        if not chk:
            return AmleVerdict(False, None, 0, chk)
    return AmleVerdict(True)


# ------------------------------------------------------------ cone comparison
@dataclass(frozen=True)
class Probe:
    """Comparison probe: is d_T(t, F(x)) <= b * d(x, z) + c inside W when it holds on its boundary?"""

    t: object
    z: GraphPoint
    b: float
    c: float
    W: frozenset

    def to_json(self, target) -> dict:
        z = {"vertex": self.z.vertex} if self.z.vertex else {"edge": list(self.z.edge), "offset": self.z.offset}
        return {"t": target.point_to_json(self.t), "z": z, "b": self.b, "c": self.c, "W": sorted(self.W)}


@dataclass(frozen=True)
class ComparisonVerdict:
    ok: bool
    probe: Probe | None = None
    point: GraphPoint | None = None
    excess: float = 0.0
    probes_checked: int = 0

    def __bool__(self) -> bool:
        return self.ok


def _region_samples(G: SimplicialGraph, core: frozenset, m: int):
    """(interior samples of the closure, boundary vertices) of the open star of core."""
    bd = sorted({w for v in core for w in G.neighbors(v)} - core)
    inner = [GraphPoint(vertex=v) for v in sorted(core)]
    for u, v in G.edges:
        if u in core or v in core:
            for lam in _edge_params(m)[1:-1]:
                inner.append(GraphPoint(edge=(u, v), offset=float(lam)))
    return inner, [GraphPoint(vertex=v) for v in bd]


def _in_open_star(z: GraphPoint, core: frozenset) -> bool:
    if z.vertex is not None:
        return z.vertex in core
    return z.edge[0] in core or z.edge[1] in core


def t_comparison_check(
    F: InterpolatedMap,
    omega: Iterable[str],
    probes: Sequence[Probe] | None = None,
    m: int = DEFAULT_RESOLUTION,
    tol: float = 1e-9,
    cap: int = 10,
    t_points: Sequence | None = None,
) -> ComparisonVerdict:
    """Search for a violation of comparison with cones from above for x -> d_T(t, F(x)).

    With explicit ``probes`` each is tested as given (its hypothesis on the
    boundary samples is checked first; probes whose hypothesis fails are
    vacuous).  Otherwise probes are generated: W over the open stars of
    nonempty S inside V minus omega (|V minus omega| <= cap), t over
    ``t_points`` (default: tree vertices and boundary images), z over
    vertices outside W, b over a grid scaled by Lip(F) and c the tightest
    constant on the boundary.
    """
    G = F.graph
    target = F.target
    omega = frozenset(omega)
    if probes is not None:
        return _check_explicit(F, probes, m, tol)

    free = [v for v in G.vertices if v not in omega]
    if len(free) > cap:
        raise InputError(f"{len(free)} free vertices exceed the comparison cap {cap}")
    if t_points is None:
        ts = [target.vertex_point(v) for v in target.vertices] if hasattr(target, "vertices") else []
        ts += [F.values[v] for v in sorted(omega)]
    else:
        ts = list(t_points)
    ts = list(dict.fromkeys(ts))
    vr = _SampledComplex(F, 0).vertex_ratio
    L = float(vr.max()) if vr.size else 0.0
    bs = sorted({0.0, L / 4, L / 2, 3 * L / 4, L, 2 * L})
    checked = 0
    for mask in range(1, 1 << len(free)):
        core = frozenset(v for i, v in enumerate(free) if mask >> i & 1)
        inner, bd = _region_samples(G, core, m)
        if not bd:
            continue
        pts = inner + bd
        img = [F.evaluate(p) for p in pts]
        Dt = target.pairwise_distances(ts, img)  # (n_t, n_pts)
        zs = [GraphPoint(vertex=v) for v in G.vertices if v not in core]
        Dz = F.complex_distances(zs, pts)  # (n_z, n_pts)
        nin = len(inner)
        for zi, b in product(range(len(zs)), bs):
            slack = Dt - b * Dz[zi][None, :]
            c = slack[:, nin:].max(axis=1)
            excess = slack[:, :nin] - c[:, None]
            checked += len(ts)
            if excess.max() > tol:
                ti, pi = np.unravel_index(int(excess.argmax()), excess.shape)
                probe = Probe(ts[ti], zs[zi], float(b), float(c[ti]), core)
                return ComparisonVerdict(False, probe, inner[pi], float(excess[ti, pi]), checked)
    return ComparisonVerdict(True, probes_checked=checked)


def _check_explicit(F: InterpolatedMap, probes: Sequence[Probe], m: int, tol: float) -> ComparisonVerdict:
    G = F.graph
    for k, pr in enumerate(probes):
        core = frozenset(pr.W)
        for v in core:
            G._check(v)
        if _in_open_star(pr.z, core):
            raise InputError(f"probe centre {pr.z!r} lies inside W")
        inner, bd = _region_samples(G, core, m)
        pts = inner + bd
        dt = F.target.pairwise_distances([pr.t], [F.evaluate(p) for p in pts])[0]
        dz = F.complex_distances([pr.z], pts)[0]
        slack = dt - pr.b * dz - pr.c
        if bd and slack[len(inner):].max() > tol:
            continue
        if slack[: len(inner)].max() > tol:
            i = int(slack[: len(inner)].argmax())
            return ComparisonVerdict(False, pr, inner[i], float(slack[i]), k + 1)
    return ComparisonVerdict(True, probes_checked=len(probes))


# ------------------------------------------------------- non-AMLE example
PLANE_VERTICES = ("A", "B", "C", "S1", "S2", "S3", "S4", "S5", "S6", "X", "Y", "Z")
PLANE_EDGES = (
    ("X", "S3"), ("S3", "A"), ("A", "S2"), ("S2", "B"), ("A", "S4"), ("S4", "C"),
    ("B", "S6"), ("S6", "C"), ("Z", "S5"), ("S5", "C"), ("Y", "S1"), ("S1", "B"),
)
PLANE_OMEGA = ("X", "Y", "Z")


def plane_example() -> tuple[SimplicialGraph, PlaneTarget, dict[str, tuple[float, float]]]:
    """Harmonic plane map of the 12-vertex triangle-with-tails graph that is not an AMLE.

    A, B, C form an equilateral triangle of side 2 whose sides are
    subdivided by S2, S4, S6.  Each tail continues a triangle side straight
    through its corner (X beyond A on line BA, Y beyond B on line CB, Z
    beyond C on line AC), so each corner is the midpoint of two collinear
    neighbours at distance 1 and every vertex outside {X, Y, Z} is
    infinity-harmonic.  The tails pull X, Y, Z to mutual distance
    sqrt(28) < 6 = their graph distance.
    """
    s3 = math.sqrt(3.0)
    A = np.array([0.0, 0.0])
    B = np.array([2.0, 0.0])
    C = np.array([1.0, s3])
    S2, S4, S6 = (A + B) / 2, (A + C) / 2, (B + C) / 2
    pts = {
        "A": A, "B": B, "C": C, "S2": S2, "S4": S4, "S6": S6,
        "S3": 2 * A - S2, "X": 2 * A - B,
        "S1": 2 * B - S6, "Y": 2 * B - C,
        "S5": 2 * C - S4, "Z": 2 * C - A,
    }
    G = SimplicialGraph(PLANE_VERTICES, PLANE_EDGES)
    return G, PlaneTarget(), {k: (float(v[0]), float(v[1])) for k, v in pts.items()}
