import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import shortest_path

from conftest import tree_and_points
from treeamle.errors import InputError, UnsupportedOperation
from treeamle.targets import (
    BoxTarget,
    MetricTree,
    PlaneTarget,
    TreePoint,
    real_point,
    real_value,
    segment_tree,
    target_from_json,
)

seeds = st.integers(0, 10**6)


def spliced_distances(T: MetricTree, pts):
    """Oracle: insert every point as a node on its edge and run Dijkstra."""
    names = list(T.vertices)
    idx = {v: i for i, v in enumerate(names)}
    node_of = []
    on_edge: dict[int, list[tuple[float, int]]] = {}
    for p in pts:
        if p.vertex is not None:
            node_of.append(idx[p.vertex])
        else:
            k = len(names)
            names.append(("p", k))
            on_edge.setdefault(p.edge, []).append((p.offset, k))
            node_of.append(k)
    rows, cols, w = [], [], []
    for e, (u, v, length) in enumerate(T.edges):
        stops = [(0.0, idx[u])] + sorted(on_edge.get(e, [])) + [(length, idx[v])]
        for (a, i), (b, j) in zip(stops, stops[1:]):
            rows.append(i)
            cols.append(j)
            w.append(max(b - a, 1e-300))  # zero weights would be dropped as missing edges
    n = len(names)
    M = coo_matrix((w, (rows, cols)), shape=(n, n)).tocsr()
    D = shortest_path(M, directed=False)
    return D[np.ix_(node_of, node_of)]


@given(seeds)
def test_distance_matches_spliced_dijkstra(seed):
    T, pts = tree_and_points(seed, 6)
    D = spliced_distances(T, pts)
    ours = T.pairwise_distances(pts)
    assert np.allclose(ours, D, atol=1e-9)
    for i, p in enumerate(pts):
        for j, q in enumerate(pts):
            assert abs(T.distance(p, q) - D[i, j]) <= 1e-9


@given(seeds, st.floats(0, 1))
def test_geodesic_point_splits_distance(seed, lam):
    T, (p, q) = tree_and_points(seed, 2)
    d = T.distance(p, q)
    g = T.geodesic_point(p, q, lam)
    assert abs(T.distance(p, g) - lam * d) <= 1e-9
    assert abs(T.distance(g, q) - (1 - lam) * d) <= 1e-9


@given(seeds)
def test_geodesic_endpoints_are_exact(seed):
    T, (p, q) = tree_and_points(seed, 2)
    assert T.geodesic_point(p, q, 0.0) == p
    assert T.geodesic_point(p, q, 1.0) == q


def _grid(T: MetricTree, per_edge: int = 200):
    pts = [T.vertex_point(v) for v in T.vertices]
    for e, (_, _, length) in enumerate(T.edges):
        pts += [T.edge_point(e, length * k / per_edge) for k in range(1, per_edge)]
    return pts


@given(seeds)
def test_one_center_matches_grid_search(seed):
    T, pts = tree_and_points(seed, 4, max_edges=5)
    c = T.one_center(pts)
    radius = max(T.distance(c, p) for p in pts)
    grid = _grid(T)
    best = T.pairwise_distances(grid, pts).max(axis=1).min()
    spacing = max(e[2] for e in T.edges) / 200
    assert radius <= best + 1e-9
    assert radius >= best - spacing


@given(seeds, st.lists(st.floats(0.0, 1.0), min_size=1, max_size=4))
def test_ball_intersection_finds_a_point_when_balls_meet(seed, slack):
    # balls around points with radii from a common witness always intersect
    T, pts = tree_and_points(seed, len(slack) + 1)
    w, centres = pts[0], pts[1:]
    balls = [(c, T.distance(c, w) + s) for c, s in zip(centres, slack)]
    z = T.ball_intersection_witness(balls)
    assert z is not None
    for c, r in balls:
        assert T.distance(c, z) <= r + 1e-9


@given(seeds)
def test_ball_intersection_empty_for_disjoint_balls(seed):
    T, (p, q) = tree_and_points(seed, 2)
    d = T.distance(p, q)
    if d < 1e-6:
        return
    assert T.ball_intersection_witness([(p, 0.3 * d), (q, 0.3 * d)]) is None


def test_midpoint_of_path():
    T = MetricTree(["a", "b", "c"], [("a", "b", 1.0), ("b", "c", 3.0)])
    m = T.midpoint(T.vertex_point("a"), T.vertex_point("c"))
    assert T.distance(m, T.vertex_point("a")) == pytest.approx(2.0)
    assert T.distance(m, T.vertex_point("b")) == pytest.approx(1.0)


def test_tripod_center_is_junction():
    T = MetricTree(["o", "x", "y", "z"], [("o", "x", 1.0), ("o", "y", 1.0), ("o", "z", 1.0)])
    leaves = [T.vertex_point(v) for v in "xyz"]
    assert T.one_center(leaves) == T.vertex_point("o")


def test_same_side():
    T = MetricTree(["o", "x", "y"], [("o", "x", 2.0), ("o", "y", 2.0)])
    cut = T.vertex_point("o")
    a, b = T.edge_point(0, 1.0), T.edge_point(0, 1.5)
    c = T.edge_point(1, 1.0)
    assert T.same_side(cut, a, b)
    assert not T.same_side(cut, a, c)
    with pytest.raises(InputError):
        T.same_side(cut, cut, a)


def test_point_json_round_trip_and_reversed_edges():
    T = MetricTree(["a", "b"], [("a", "b", 2.0)])
    p = T.edge_point(0, 0.5)
    assert T.point_from_json(T.point_to_json(p)) == p
    assert T.point_from_json({"edge": ["b", "a"], "offset": 1.5}) == p
    assert T.point_from_json({"edge": ["a", "b"], "offset": 0.0}) == T.vertex_point("a")


@given(seeds)
def test_tree_json_round_trip(seed):
    T, pts = tree_and_points(seed, 3)
    T2 = MetricTree.from_json(T.to_json())
    assert T2 == T
    for p in pts:
        assert T2.point_from_json(T.point_to_json(p)) == p


@pytest.mark.parametrize(
    "vertices,edges",
    [
        (["a", "b", "c"], [("a", "b", 1.0), ("b", "c", 1.0), ("c", "a", 1.0)]),  # cycle
        (["a", "b", "c"], [("a", "b", 1.0)]),  # disconnected
        (["a", "b"], [("a", "b", -1.0)]),  # negative length
        (["a", "b"], [("a", "b", 0.0)]),  # zero length
    ],
)
def test_invalid_trees_rejected(vertices, edges):
    with pytest.raises(InputError):
        MetricTree(vertices, edges)


def test_edge_offset_out_of_range():
    T = MetricTree(["a", "b"], [("a", "b", 1.0)])
    with pytest.raises(InputError):
        T.edge_point(0, 1.5)


def test_segment_tree_reals():
    S = segment_tree(-1.0, 3.0)
    for x in (-1.0, 0.0, 2.5, 3.0):
        assert real_value(S, real_point(S, x)) == pytest.approx(x)
    assert S.distance(real_point(S, 0.0), real_point(S, 2.5)) == pytest.approx(2.5)


def test_box_distance_and_ball_intersection():
    B = BoxTarget(2)
    assert B.distance((0.0, 0.0), (1.0, -3.0)) == 3.0
    z = B.ball_intersection_witness([((0.0, 0.0), 1.0), ((1.5, 0.0), 1.0)])
    assert max(abs(z[0] - 0.0), abs(z[1])) <= 1.0
    assert max(abs(z[0] - 1.5), abs(z[1])) <= 1.0
    assert B.ball_intersection_witness([((0.0, 0.0), 1.0), ((3.0, 0.0), 1.0)]) is None


def test_box_geodesic_is_straight():
    B = BoxTarget(2)
    g = B.geodesic_point((0.0, 0.0), (2.0, 1.0), 0.5)
    assert g == pytest.approx((1.0, 0.5))


def test_plane_has_no_ball_intersection():
    P = PlaneTarget()
    assert P.distance((0.0, 0.0), (3.0, 4.0)) == 5.0
    assert P.geodesic_point((0.0, 0.0), (2.0, 2.0), 0.25) == pytest.approx((0.5, 0.5))
    with pytest.raises(UnsupportedOperation):
        P.ball_intersection_witness([((0.0, 0.0), 1.0)])


def test_target_from_json_dispatch():
    assert isinstance(target_from_json({"type": "plane"}), PlaneTarget)
    assert target_from_json({"type": "box", "dimension": 3}).dimension == 3
    with pytest.raises(InputError):
        target_from_json({"type": "sphere"})


def test_tree_point_is_hashable_and_canonical():
    T = MetricTree(["a", "b"], [("a", "b", 1.0)])
    assert T.edge_point(0, 1e-14) == T.vertex_point("a")
    assert len({T.edge_point(0, 0.5), T.point_between("b", "a", 0.5)}) == 1
    assert isinstance(T.vertex_point("a"), TreePoint)


def test_diameter():
    T = MetricTree(["o", "x", "y", "z"], [("o", "x", 1.0), ("o", "y", 2.0), ("o", "z", 3.5)])
    assert T.diameter == pytest.approx(5.5)
    assert math.isclose(T.vertex_distance("x", "z"), 4.5)
