"""Infinity-harmonicity checks and the constructive infinity-harmonic extension."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .errors import ExtensionInvariantError, InputError
from .graphs import INF, SimplicialGraph

POLICIES = ("lex", "revlex")


@dataclass(frozen=True)
class HarmonicCheck:
    ok: bool
    vertex: str
    max_dist: float
    pair: tuple[str, str] | None = None
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok


def is_inf_harmonic_at(G: SimplicialGraph, target, f: Mapping[str, object], v: str, tol: float = 1e-9) -> HarmonicCheck:
    """Check the two-clause infinity-harmonicity condition at v.

    Returns a truthy ``HarmonicCheck`` carrying the lexicographically first
    witnessing neighbour pair, or a falsy one with the violated clause.
    """
    nbrs = G.neighbors(v, include_loop=True)
    if not nbrs:
        raise InputError(f"vertex {v!r} has no neighbours")
    for z in (v, *nbrs):
        if z not in f:
            raise InputError(f"map undefined at {z!r}")
    fv = f[v]
    dists = [target.distance(f[z], fv) for z in nbrs]
    M = max(dists)
    if M <= tol:
        return HarmonicCheck(True, v, M, (nbrs[0], nbrs[0]))
    far = [z for z, d in zip(nbrs, dists) if abs(d - M) <= tol]
    for i, u in enumerate(far):
        for w in far[i + 1:]:
            if abs(target.distance(f[u], f[w]) - 2 * M) <= tol:
                return HarmonicCheck(True, v, M, (u, w))
    if len(far) == 1:
        reason = f"only {far[0]!r} attains the maximal distance {M}"
    else:
        reason = f"no pair among {far} is at distance {2 * M}"
    return HarmonicCheck(False, v, M, None, reason)


def harmonic_violations(G: SimplicialGraph, target, f: Mapping[str, object], omega: Iterable[str], tol: float = 1e-9) -> list[HarmonicCheck]:
    """Failed checks at every vertex outside omega (empty list means harmonic)."""
    omega = set(omega)
    out = []
    for v in G.vertices:
        if v in omega:
            continue
        chk = is_inf_harmonic_at(G, target, f, v, tol)
        if not chk:
            out.append(chk)
    return out


def lipschitz_constant(target, f: Mapping[str, object], S: Iterable[str], G: SimplicialGraph, omega: Iterable[str] | None = None) -> float:
    """Max ratio d_Z(f(x), f(y)) / d(x, y) over distinct x, y in S.

    The metric is d_G, or the external distance with respect to ``omega``
    when given; pairs at infinite distance contribute 0.
    """
    S = sorted(set(S))
    if not S:
        raise InputError("Lipschitz constant over an empty set")
    for x in S:
        if x not in f:
            raise InputError(f"map undefined at {x!r}")
    if len(S) == 1:
        return 0.0
    blocked = frozenset(omega) if omega is not None else frozenset()
    D = np.empty((len(S), len(S)))
    for i, x in enumerate(S):
        dist = G.graph_distances_from(x, blocked)
        D[i] = [dist.get(y, np.inf) for y in S]
    T = target.pairwise_distances([f[x] for x in S])
    np.fill_diagonal(D, np.inf)
    with np.errstate(invalid="ignore"):
        R = np.where(np.isinf(D), 0.0, T / D)
    return float(R.max())


@dataclass(frozen=True)
class Step:
    """One assignment made by the extension: case 1 (anchor copy) or 2 (ball intersection)."""

    vertex: str
    case: int
    L: float | None = None
    pair: tuple[str, str] | None = None


@dataclass
class Extension:
    values: dict[str, object]
    trace: list[Step] = field(default_factory=list)

    @property
    def order(self) -> list[str]:
        return [s.vertex for s in self.trace]

    @property
    def constants(self) -> list[float]:
        return [s.L for s in self.trace if s.case == 2]


def _direct_distances(G: SimplicialGraph, src: str, assigned) -> dict[str, int]:
    """BFS from src moving only through unassigned vertices.

    Assigned vertices other than src are recorded on arrival but never expanded.
    """
    dist = {src: 0}
    queue = deque([src])
    while queue:
        a = queue.popleft()
        if a != src and a in assigned:
            continue
        for b in G.neighbors(a):
            if b in dist or (a == src and b in assigned):
                continue
            dist[b] = dist[a] + 1
            queue.append(b)
    return dist


def extend_inf_harmonic(
    G: SimplicialGraph,
    target,
    boundary: Mapping[str, object],
    policy: str = "lex",
) -> Extension:
    """Extend boundary data to an infinity-harmonic map on all vertices.

    At each step the assigned set A is enlarged by one vertex w chosen on a
    shortest external path between a pair of assigned vertices maximising
    d_Z(f(x), f(y)) / d_A(x, y); w receives a point of the intersection of
    the balls B(f(a), L * d_A(a, w)).  When no two assigned vertices are
    joined by an external path, each remaining vertex copies the value of
    the unique assigned vertex it can reach.

    ``policy`` ("lex" or "revlex") orders vertices for tie-breaks; for tree
    targets the result does not depend on it.
    """
    if policy not in POLICIES:
        raise InputError(f"unknown policy {policy!r}")
    if not boundary:
        raise InputError("boundary set is empty")
    if G.loops:
        G = G.without_loops()
    for v in boundary:
        G._check(v)
    rank = {v: i for i, v in enumerate(G.vertices)}
    if policy == "revlex":
        n = len(rank)
        rank = {v: n - 1 - i for v, i in rank.items()}

    values = dict(boundary)
    trace: list[Step] = []
    unassigned = {v for v in G.vertices if v not in values}

    while unassigned:
        assigned = values.keys()
        frontier = sorted(
            (a for a in assigned if any(b in unassigned for b in G.neighbors(a))),
            key=rank.__getitem__,
        )
        direct = {a: _direct_distances(G, a, assigned) for a in frontier}
        pairs = []
        for i, x in enumerate(frontier):
            dx = direct[x]
            for y in frontier[i + 1:]:
                if y in dx:
                    pairs.append((x, y, dx[y]))

        if not pairs:
            # every unassigned vertex reaches exactly one assigned vertex
            for w in sorted(unassigned, key=rank.__getitem__):
                anchors = [a for a in frontier if w in direct[a]]
                if len(anchors) != 1:
                    raise ExtensionInvariantError(f"vertex {w!r} reaches {len(anchors)} anchors in case 1")
                values[w] = values[anchors[0]]
                trace.append(Step(w, 1, None, (anchors[0], anchors[0])))
            break

        xs = [values[p[0]] for p in pairs]
        ys = [values[p[1]] for p in pairs]
        num = np.array([target.distance(a, b) for a, b in zip(xs, ys)])
        ratios = num / np.array([p[2] for p in pairs], dtype=float)
        L = float(ratios.max())
        cands = [p for p, r in zip(pairs, ratios) if r >= L * (1 - 1e-12)]
        x, y, dxy = min(cands, key=lambda p: (rank[p[0]], rank[p[1]]))
        dy = direct[y]
        steps = [u for u in G.neighbors(x) if u in unassigned and dy.get(u) == dxy - 1]
        if not steps:
            raise ExtensionInvariantError(f"no external path step from {x!r} towards {y!r}")
        w = min(steps, key=rank.__getitem__)

        dk = G.graph_distances_from(w, frozenset(assigned))
        balls = [(values[a], L * dk[a]) for a in sorted(assigned, key=rank.__getitem__) if a in dk]
        point = target.ball_intersection_witness(balls)
        if point is None:
            raise ExtensionInvariantError(f"empty ball intersection when assigning {w!r} (L={L})")
        values[w] = point
        unassigned.discard(w)
        trace.append(Step(w, 2, L, (x, y)))

    return Extension(values, trace)
