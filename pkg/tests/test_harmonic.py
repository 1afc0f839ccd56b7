import random

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from treeamle.errors import InputError
from treeamle.graphs import SimplicialGraph
from treeamle.harmonic import (
    extend_inf_harmonic,
    harmonic_violations,
    is_inf_harmonic_at,
    lipschitz_constant,
)
from treeamle.io import load_fixture, map_from_json
from treeamle.repro import random_graph, random_instance
from treeamle.targets import MetricTree, real_point, real_value, segment_tree, target_from_json

seeds = st.integers(0, 10**6)


def fixture_instance(name):
    fx = load_fixture(name)
    G = SimplicialGraph.from_json(fx["graph"])
    T = target_from_json(fx["target"])
    f, omega = map_from_json(T, fx["boundary"], G)
    return G, T, f, fx


def midrange_relaxation(G, boundary: dict[str, float], sweeps=200_000, tol=1e-14):
    """Oracle for real data: Gauss-Seidel iteration of u(v) = (max + min of neighbours) / 2."""
    u = {v: boundary.get(v, 0.0) for v in G.vertices}
    free = [v for v in G.vertices if v not in boundary]
    for _ in range(sweeps):
        change = 0.0
        for v in free:
            ns = [u[w] for w in G.neighbors(v)]
            new = 0.5 * (max(ns) + min(ns))
            change = max(change, abs(new - u[v]))
            u[v] = new
        if change < tol:
            return u
    raise AssertionError("relaxation did not converge")


def test_path_fixture():
    G, T, f, fx = fixture_instance("path_extension")
    expected, _ = map_from_json(T, fx["expected"], G)
    assert extend_inf_harmonic(G, T, f).values == expected


def test_tripod_fixture():
    G, T, f, fx = fixture_instance("tripod_star")
    expected, _ = map_from_json(T, fx["expected"], G)
    assert extend_inf_harmonic(G, T, f).values == expected


def test_tripod_centre_matches_grid_search():
    # the free centre must minimise the largest distance to the three leaf images
    G, T, f, _ = fixture_instance("tripod_star")
    c = extend_inf_harmonic(G, T, f).values["c"]
    leaves = [f[v] for v in ("x1", "x2", "x3")]
    grid = [T.vertex_point(v) for v in T.vertices]
    for e, (_, _, length) in enumerate(T.edges):
        grid += [T.edge_point(e, length * k / 400) for k in range(1, 400)]
    scores = T.pairwise_distances(grid, leaves).max(axis=1)
    best = grid[int(np.argmin(scores))]
    assert T.distance(best, c) <= 2.0 / 400


@given(seeds)
def test_real_valued_extension_matches_relaxation(seed):
    rng = random.Random(seed)
    G = random_graph(rng, rng.randint(2, 9), rng.uniform(0, 0.4))
    S = segment_tree(0.0, 5.0)
    omega = rng.sample(G.vertices, rng.randint(1, len(G)))
    reals = {v: round(rng.uniform(0, 5), 3) for v in omega}
    ext = extend_inf_harmonic(G, S, {v: real_point(S, x) for v, x in reals.items()}).values
    oracle = midrange_relaxation(G, reals)
    for v in G.vertices:
        assert real_value(S, ext[v]) == pytest.approx(oracle[v], abs=1e-9)


@given(seeds)
def test_extension_postconditions(seed):
    inst = random_instance(seed, max_vertices=15, max_tree_edges=10)
    G, T, f = inst.graph, inst.tree, inst.boundary
    ext = extend_inf_harmonic(G, T, f)
    assert not harmonic_violations(G, T, ext.values, f)
    assert all(ext.values[v] == f[v] for v in f)
    l_ext = lipschitz_constant(T, ext.values, G.vertices, G)
    assert abs(l_ext - lipschitz_constant(T, f, f, G)) <= 1e-9
    rev = extend_inf_harmonic(G, T, f, "revlex").values
    assert max(T.distance(ext.values[v], rev[v]) for v in G.vertices) <= 1e-9


@given(seeds)
def test_step_constants_never_increase(seed):
    inst = random_instance(seed, max_vertices=15, max_tree_edges=10)
    ext = extend_inf_harmonic(inst.graph, inst.tree, inst.boundary)
    L = ext.constants
    assert all(b <= a + 1e-9 for a, b in zip(L, L[1:]))
    assert sorted(ext.order) == sorted(set(inst.graph.vertices) - set(inst.boundary))


def test_isolated_component_copies_its_anchor():
    # c and d only reach b once a and b are fixed with no external path between them
    G = SimplicialGraph("abcd", [("a", "b"), ("b", "c"), ("c", "d")])
    T = MetricTree(["p", "q"], [("p", "q", 1.0)])
    ext = extend_inf_harmonic(G, T, {"a": T.vertex_point("p"), "b": T.vertex_point("q")})
    assert ext.values["c"] == ext.values["d"] == T.vertex_point("q")
    assert [s.case for s in ext.trace] == [1, 1]


def test_self_loops_are_ignored_by_the_extension():
    G = SimplicialGraph("abc", [("a", "b"), ("b", "c"), ("b", "b")], allow_self_loops=True)
    S = segment_tree(0.0, 2.0)
    ext = extend_inf_harmonic(G, S, {"a": real_point(S, 0.0), "c": real_point(S, 2.0)})
    assert real_value(S, ext.values["b"]) == pytest.approx(1.0)


def test_perturbed_value_is_not_harmonic():
    G, T, f, fx = fixture_instance("path_extension")
    vals = dict(extend_inf_harmonic(G, T, f).values)
    assert is_inf_harmonic_at(G, T, vals, "1")
    vals["1"] = T.edge_point(0, 1.1)
    chk = is_inf_harmonic_at(G, T, vals, "1")
    assert not chk and chk.reason


def test_constant_neighbourhood_is_harmonic():
    G = SimplicialGraph("abc", [("a", "b"), ("b", "c")])
    T = MetricTree(["p", "q"], [("p", "q", 1.0)])
    p = T.vertex_point("p")
    chk = is_inf_harmonic_at(G, T, {"a": p, "b": p, "c": p}, "b")
    assert chk and chk.max_dist == 0.0


def test_box_fixture_has_several_harmonic_extensions():
    G, B, f, fx = fixture_instance("box_multiple")
    maps = [map_from_json(B, obj, G)[0] for obj in fx["extensions"]]
    assert len({tuple(m[v] for v in G.vertices) for m in maps}) == len(maps) > 1
    for m in maps:
        assert not harmonic_violations(G, B, m, f)
        assert lipschitz_constant(B, m, G.vertices, G) == pytest.approx(lipschitz_constant(B, f, f, G))


def test_bad_inputs():
    G = SimplicialGraph("ab", [("a", "b")])
    T = MetricTree(["p", "q"], [("p", "q", 1.0)])
    with pytest.raises(InputError):
        extend_inf_harmonic(G, T, {})
    with pytest.raises(InputError):
        extend_inf_harmonic(G, T, {"z": T.vertex_point("p")})
    with pytest.raises(InputError):
        extend_inf_harmonic(G, T, {"a": T.vertex_point("p")}, policy="random")
    with pytest.raises(InputError):
        is_inf_harmonic_at(G, T, {"a": T.vertex_point("p")}, "a")
