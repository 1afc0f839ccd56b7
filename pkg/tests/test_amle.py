import itertools
import math
import random

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from treeamle.amle import (
    PLANE_OMEGA,
    InterpolatedMap,
    Probe,
    complex_distance,
    interpolate_eval,
    is_amle_exhaustive,
    is_amle_via_harmonicity,
    lip_over_region,
    open_set_lipschitz,
    plane_example,
    t_comparison_check,
)
from treeamle.errors import InputError, UnsupportedOperation
from treeamle.graphs import GraphPoint, SimplicialGraph, graph_point
from treeamle.harmonic import extend_inf_harmonic, is_inf_harmonic_at
from treeamle.io import load_fixture, map_from_json
from treeamle.repro import random_instance, random_tree_point
from treeamle.targets import MetricTree, PlaneTarget, real_point, segment_tree

seeds = st.integers(0, 10**6)


def path_map():
    fx = load_fixture("path_extension")
    G = SimplicialGraph.from_json(fx["graph"])
    T = MetricTree.from_json(fx["target"])
    vals, omega = map_from_json(T, fx["expected"], G)
    return G, T, vals, omega


@given(seeds)
def test_interpolation_is_geodesic_on_edges(seed):
    inst = random_instance(seed, max_vertices=8, max_tree_edges=6)
    G, T = inst.graph, inst.tree
    vals = extend_inf_harmonic(G, T, inst.boundary).values
    F = InterpolatedMap(G, T, vals)
    rng = random.Random(seed)
    for u, v in G.edges:
        d = T.distance(vals[u], vals[v])
        for _ in range(10):
            lam = rng.random()
            y = interpolate_eval(F, graph_point(G, u, v, lam))
            assert abs(T.distance(vals[u], y) - lam * d) <= 1e-9
            assert abs(T.distance(y, vals[v]) - (1 - lam) * d) <= 1e-9


def brute_complex_distance(G, p: GraphPoint, q: GraphPoint) -> float:
    """Oracle: minimise over the endpoints each point can leave through."""
    D = G.distance_matrix()

    def exits(x):
        if x.vertex is not None:
            return [(x.vertex, 0.0)]
        u, v = x.edge
        return [(u, x.offset), (v, 1 - x.offset)]

    if p.edge is not None and p.edge == q.edge:
        direct = abs(p.offset - q.offset)
    else:
        direct = math.inf
    via = min(a + D[G.index[u], G.index[v]] + b for (u, a), (v, b) in itertools.product(exits(p), exits(q)))
    return min(direct, via)


@given(seeds)
def test_complex_distance_matches_endpoint_enumeration(seed):
    rng = random.Random(seed)
    inst = random_instance(seed, max_vertices=8, max_tree_edges=3)
    G = inst.graph
    F = InterpolatedMap(G, inst.tree, extend_inf_harmonic(G, inst.tree, inst.boundary).values)

    def rand_pt():
        if not G.edges or rng.random() < 0.3:
            return GraphPoint(vertex=rng.choice(G.vertices))
        u, v = rng.choice(G.edges)
        return graph_point(G, u, v, rng.random())

    for _ in range(10):
        p, q = rand_pt(), rand_pt()
        assert complex_distance(F, p, q) == pytest.approx(brute_complex_distance(G, p, q), abs=1e-12)


def test_path_map_is_certified_both_ways():
    G, T, vals, omega = path_map()
    assert is_amle_via_harmonicity(G, omega, T, vals)
    assert is_amle_exhaustive(G, omega, InterpolatedMap(G, T, vals))


def test_perturbed_path_map_fails_both_ways():
    G, T, vals, omega = path_map()
    vals = dict(vals)
    vals["1"] = T.edge_point(0, 1.1)
    assert not is_amle_via_harmonicity(G, omega, T, vals)
    v = is_amle_exhaustive(G, omega, InterpolatedMap(G, T, vals))
    assert not v and v.violation.lip_open > v.violation.lip_boundary


@given(seeds)
def test_verifiers_agree(seed):
    inst = random_instance(seed, max_vertices=9, max_tree_edges=5, max_free=7)
    G, T, f = inst.graph, inst.tree, inst.boundary
    vals = dict(extend_inf_harmonic(G, T, f).values)
    free = [v for v in G.vertices if v not in f]
    rng = random.Random(seed)
    if free and rng.random() < 0.5:
        vals[rng.choice(free)] = random_tree_point(rng, T)
    a = bool(is_amle_via_harmonicity(G, f, T, vals))
    b = bool(is_amle_exhaustive(G, f, InterpolatedMap(G, T, vals)))
    assert a == b


def test_real_valued_path_interpolation_is_amle():
    # linear data on a path: harmonic at every vertex and after subdivision
    G = SimplicialGraph([str(i) for i in range(5)], [(str(i), str(i + 1)) for i in range(4)])
    S = segment_tree(0.0, 4.0)
    vals = {str(i): real_point(S, float(i)) for i in range(5)}
    assert is_amle_via_harmonicity(G, {"0", "4"}, S, vals)
    F = InterpolatedMap(G, S, vals)
    assert lip_over_region(F, [GraphPoint(vertex=str(i)) for i in range(5)]) == pytest.approx(1.0)


def test_exhaustive_cap_enforced():
    G = SimplicialGraph([str(i) for i in range(17)], [(str(i), str(i + 1)) for i in range(16)])
    S = segment_tree(0.0, 1.0)
    vals = {v: real_point(S, 0.0) for v in G.vertices}
    with pytest.raises(InputError):
        is_amle_exhaustive(G, {"0"}, InterpolatedMap(G, S, vals))


# -------------------------------------------------------------- plane example
def test_plane_example_map_is_harmonic_but_not_amle():
    G, P, vals = plane_example()
    for v in G.vertices:
        if v not in PLANE_OMEGA:
            assert is_inf_harmonic_at(G, P, vals, v)
    free = [v for v in G.vertices if v not in PLANE_OMEGA]
    lip_u, lip_bd = open_set_lipschitz(InterpolatedMap(G, P, vals), free)
    assert lip_bd < 1
    assert lip_u >= 1 - 1e-6
    assert not is_amle_exhaustive(G, PLANE_OMEGA, InterpolatedMap(G, P, vals))


def test_plane_example_boundary_images_closer_than_graph_distance():
    # unit edges: X, Y, Z are 6 apart in G, their images sqrt(28) apart
    G, P, vals = plane_example()
    for a, b in itertools.combinations(PLANE_OMEGA, 2):
        assert P.distance(vals[a], vals[b]) == pytest.approx(math.sqrt(28))
        assert G.graph_distances_from(a)[b] == 6


def test_plane_example_fixture_matches_construction():
    fx = load_fixture("plane_example")
    G, P, vals = plane_example()
    assert SimplicialGraph.from_json(fx["graph"]) == G
    loaded, omega = map_from_json(P, fx["map"], G)
    assert omega == frozenset(PLANE_OMEGA)
    for v in G.vertices:
        assert P.distance(loaded[v], vals[v]) <= 1e-12


def test_harmonic_certificate_refuses_plane_targets():
    G, P, vals = plane_example()
    with pytest.raises(UnsupportedOperation):
        is_amle_via_harmonicity(G, PLANE_OMEGA, P, vals)


# ------------------------------------------------------------ cone comparison
def test_comparison_passes_for_amle():
    G, T, vals, omega = path_map()
    assert t_comparison_check(InterpolatedMap(G, T, vals), omega)


def test_comparison_finds_bump():
    # a free vertex pushed away from its neighbours breaks comparison with cones
    G = SimplicialGraph("abc", [("a", "b"), ("b", "c")])
    S = segment_tree(0.0, 3.0)
    vals = {"a": real_point(S, 0.0), "b": real_point(S, 2.5), "c": real_point(S, 1.0)}
    v = t_comparison_check(InterpolatedMap(G, S, vals), {"a", "c"})
    assert not v and v.excess > 0


def test_explicit_probe():
    G = SimplicialGraph("abc", [("a", "b"), ("b", "c")])
    S = segment_tree(0.0, 3.0)
    bump = {"a": real_point(S, 0.0), "b": real_point(S, 2.5), "c": real_point(S, 1.0)}
    F = InterpolatedMap(G, S, bump)
    # t = 0: d(t, F) is 0 at a and 1 at c, so the cone 1 + 0 * d(x, a) bounds it on the boundary
    probe = Probe(real_point(S, 0.0), GraphPoint(vertex="a"), 0.0, 1.0, frozenset({"b"}))
    assert not t_comparison_check(F, {"a", "c"}, [probe])
    with pytest.raises(InputError):
        t_comparison_check(F, {"a", "c"}, [Probe(real_point(S, 0.0), GraphPoint(vertex="b"), 0.0, 1.0, frozenset({"b"}))])
