"""Random instance generators and the acceptance experiments.

Every experiment is a deterministic function of its seed and returns a
``CriterionResult``; the CLI ``repro`` command and the acceptance tests both
call these functions.
"""

from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .amle import (
    PLANE_OMEGA,
    InterpolatedMap,
    is_amle_exhaustive,
    is_amle_via_harmonicity,
    open_set_lipschitz,
    plane_example,
)
from .discretize import (
    ComplexData,
    ConeData,
    GraphComplexDomain,
    IntervalDomain,
    RectDomain,
    build_net,
    convergence_report,
    solve_net,
)
from .graphs import SimplicialGraph, subdivide
from .harmonic import extend_inf_harmonic, harmonic_violations, is_inf_harmonic_at, lipschitz_constant
from .io import load_fixture, map_from_json
from .politics import GameConfig, Optimal, adversaries, estimate_value, martingale_drift
from .targets import BoxTarget, MetricTree, TreePoint, segment_tree, target_from_json


# --------------------------------------------------------------- generators
def random_tree(rng: random.Random, n_edges: int, lo: float = 0.2, hi: float = 3.0) -> MetricTree:
    """Random recursive tree on n_edges + 1 vertices with uniform edge lengths."""
    vs = [f"t{i}" for i in range(n_edges + 1)]
    es = [(vs[i], vs[rng.randrange(i)], rng.uniform(lo, hi)) for i in range(1, n_edges + 1)]
    return MetricTree(vs, es)


def random_tree_point(rng: random.Random, T: MetricTree, vertex_prob: float = 0.3) -> TreePoint:
    if not T.edges or rng.random() < vertex_prob:
        return T.vertex_point(rng.choice(T.vertices))
    e = rng.randrange(len(T.edges))
    return T.edge_point(e, rng.uniform(0, T.edges[e][2]))


def random_graph(rng: random.Random, n: int, p: float) -> SimplicialGraph:
    """Random spanning tree plus independent extra edges with probability p."""
    vs = [f"v{i:02d}" for i in range(n)]
    es = [(vs[i], vs[rng.randrange(i)]) for i in range(1, n)]
    es += [(vs[i], vs[j]) for i in range(n) for j in range(i + 1, n) if rng.random() < p]
    return SimplicialGraph(vs, es)


@dataclass
class Instance:
    graph: SimplicialGraph
    tree: MetricTree
    boundary: dict


def random_instance(seed: int, max_vertices: int = 30, max_tree_edges: int = 20, max_free: int | None = None) -> Instance:
    rng = random.Random(seed)
    n = rng.randint(2, max_vertices)
    G = random_graph(rng, n, rng.uniform(0.0, 0.35))
    T = random_tree(rng, rng.randint(1, max_tree_edges))
    lo = 1 if max_free is None else max(1, n - max_free)
    omega = rng.sample(G.vertices, rng.randint(lo, n))
    return Instance(G, T, {v: random_tree_point(rng, T) for v in sorted(omega)})


def load_game(name: str, seed: int = 0, max_rounds: int = 10_000) -> tuple[GameConfig, float]:
    """Politics fixture as a configuration plus its frozen value."""
    fx = load_fixture(name)
    G = SimplicialGraph.from_json(fx["graph"])
    T = MetricTree.from_json(fx["target"])
    term, _ = map_from_json(T, fx["terminal"], G)
    cfg = GameConfig(G, frozenset(term), T, term, fx["x0"], T.point_from_json(fx["t0"]), max_rounds, seed)
    return cfg, float(fx["value"])


GAME_FIXTURES = ("politics_path", "politics_tripod", "politics_loops", "politics_grid", "politics_mixed")


# ------------------------------------------------------------------ results
@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    details: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] criterion {self.number}: {self.title} ({self.seconds:.1f}s)"

    def to_json(self) -> dict:
        return {"criterion": self.number, "title": self.title, "passed": self.passed, "seconds": self.seconds, "details": self.details}


def _timed(fn: Callable[..., CriterionResult]) -> Callable[..., CriterionResult]:
    def wrapper(*args, **kwargs):
        t = time.perf_counter()
        res = fn(*args, **kwargs)
        res.seconds = time.perf_counter() - t
        return res

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


# --------------------------------------------------------------- experiments
@dataclass
class ExtensionSuite:
    harmonic_failures: list = field(default_factory=list)
    lipschitz_failures: list = field(default_factory=list)
    policy_gaps: list = field(default_factory=list)
    seconds: float = 0.0
    instances: int = 0


def run_extension_suite(n: int = 200, seed: int = 0, tol: float = 1e-9) -> ExtensionSuite:
    """Random extensions checked for harmonicity, Lipschitz preservation and policy independence."""
    out = ExtensionSuite(instances=n)
    t = time.perf_counter()
    for i in range(n):
        inst = random_instance(seed * 100_003 + i)
        G, T, f = inst.graph, inst.tree, inst.boundary
        ext = extend_inf_harmonic(G, T, f, "lex").values
        bad = harmonic_violations(G, T, ext, f, tol)
        if bad:
            out.harmonic_failures.append((i, bad[0].vertex, bad[0].reason))
        l_ext = lipschitz_constant(T, ext, G.vertices, G)
        l_bd = lipschitz_constant(T, f, f, G)
        if abs(l_ext - l_bd) > tol:
            out.lipschitz_failures.append((i, l_ext, l_bd))
        rev = extend_inf_harmonic(G, T, f, "revlex").values
        gap = max(T.distance(ext[v], rev[v]) for v in G.vertices)
        if gap > tol:
            out.policy_gaps.append((i, gap))
    out.seconds = time.perf_counter() - t
    return out


@_timed
def criterion_1(n: int = 200, seed: int = 0, suite: ExtensionSuite | None = None) -> CriterionResult:
    """Extension output is infinity-harmonic and Lipschitz-preserving on random instances."""
    s = suite or run_extension_suite(n, seed)
    ok = not s.harmonic_failures and not s.lipschitz_failures
    return CriterionResult(1, "random extensions are infinity-harmonic and Lipschitz-preserving", ok, {
        "instances": s.instances,
        "harmonic_failures": s.harmonic_failures[:5],
        "lipschitz_failures": s.lipschitz_failures[:5],
        "extension_seconds": s.seconds,
    })


@_timed
def criterion_2(n: int = 100, seed: int = 1, m: int = 16, tol: float = 1e-6) -> CriterionResult:
    """Harmonic-route and exhaustive AMLE verdicts agree; algorithm outputs pass both.

    Each instance is checked as produced and, when it has a free vertex,
    with one free value replaced by a random point (verdicts must still agree).
    """
    disagreements = []
    rejected_outputs = []
    perturbed_false = 0
    for i in range(n):
        inst = random_instance(seed * 100_003 + i, max_vertices=14, max_tree_edges=8, max_free=12)
        G, T, f = inst.graph, inst.tree, inst.boundary
        ext = extend_inf_harmonic(G, T, f).values
        maps = [("output", ext)]
        free = [v for v in G.vertices if v not in f]
        if free:
            rng = random.Random(seed * 7919 + i)
            bad = dict(ext)
            bad[rng.choice(free)] = random_tree_point(rng, T)
            maps.append(("perturbed", bad))
        for kind, vals in maps:
            a = bool(is_amle_via_harmonicity(G, f, T, vals))
            b = bool(is_amle_exhaustive(G, f, InterpolatedMap(G, T, vals), m=m, tol=tol))
            if a != b:
                disagreements.append((i, kind, a, b))
            if kind == "output" and not (a and b):
                rejected_outputs.append((i, a, b))
            if kind == "perturbed" and not a:
                perturbed_false += 1
    ok = not disagreements and not rejected_outputs
    return CriterionResult(2, "harmonic and exhaustive AMLE verifiers agree", ok, {
        "instances": n,
        "disagreements": disagreements[:5],
        "rejected_outputs": rejected_outputs[:5],
        "perturbed_non_amle": perturbed_false,
    })


@_timed
def criterion_3(m: int = 16) -> CriterionResult:
    """The plane example: harmonic at all 9 free vertices, yet the exhaustive check fails on U = G minus {X, Y, Z}."""
    G, P, vals = plane_example()
    free = [v for v in G.vertices if v not in PLANE_OMEGA]
    harmonic = {v: bool(is_inf_harmonic_at(G, P, vals, v, 1e-9)) for v in free}
    F = InterpolatedMap(G, P, vals)
    lip_u, lip_bd = open_set_lipschitz(F, free, m=m)
    verdict = is_amle_exhaustive(G, PLANE_OMEGA, F, m=m, tol=1e-6)
    ok = all(harmonic.values()) and lip_bd < 1 and lip_u >= 1 - 1e-6 and not verdict
    return CriterionResult(3, "harmonic plane map that is not an AMLE", ok, {
        "harmonic": harmonic,
        "lip_U": lip_u,
        "lip_boundary": lip_bd,
        "exhaustive_ok": bool(verdict),
        "first_violation": verdict.violation.to_json() if verdict.violation else None,
    })


@_timed
def criterion_4(n: int = 200, seed: int = 0, suite: ExtensionSuite | None = None) -> CriterionResult:
    """Forward and reversed tie-break policies agree on tree targets; the box example is only reported."""
    s = suite or run_extension_suite(n, seed)
    fx = load_fixture("box_multiple")
    G = SimplicialGraph.from_json(fx["graph"])
    B = target_from_json(fx["target"])
    f, omega = map_from_json(B, fx["boundary"], G)
    distinct = []
    for obj in fx["extensions"]:
        vals, _ = map_from_json(B, obj, G)
        harmonic = not harmonic_violations(G, B, vals, omega)
        lip = lipschitz_constant(B, vals, G.vertices, G)
        distinct.append({"harmonic": harmonic, "lipschitz": lip})
    lex = extend_inf_harmonic(G, B, f, "lex").values
    rev = extend_inf_harmonic(G, B, f, "revlex").values
    box_ok = all(d["harmonic"] and abs(d["lipschitz"] - 1.0) <= 1e-12 for d in distinct)
    ok = not s.policy_gaps and box_ok
    return CriterionResult(4, "tie-break independence on tree targets", ok, {
        "instances": s.instances,
        "policy_gaps": s.policy_gaps[:5],
        "box_extensions": distinct,
        "box_policies_differ": any(B.distance(lex[v], rev[v]) > 1e-9 for v in G.vertices),
    })


@_timed
def criterion_5(trials: int = 100_000, seed: int = 0, jobs: int = 1, names=GAME_FIXTURES) -> CriterionResult:
    """Monte-Carlo value within 3 standard errors of d_T(F(x0), t0) on the game fixtures."""
    rows = {}
    ok = True
    for name in names:
        t = time.perf_counter()
        cfg, value = load_game(name, seed)
        est = estimate_value(cfg, trials, jobs)
        secs = time.perf_counter() - t
        good = (
            abs(est.formula - value) <= 1e-12
            and abs(est.mean - value) <= 3 * est.stderr
            and est.censored_fraction < 1e-3
            and secs < 60
        )
        ok &= good
        rows[name] = dict(est.to_json(), fixture_value=value, seconds=secs, passed=good)
    return CriterionResult(5, "game value matches the extension formula", ok, rows)


@_timed
def criterion_6(min_rounds: int = 100_000, seed: int = 0, fixture: str = "politics_mixed") -> CriterionResult:
    """Super/submartingale drift of the monitored quantity against three adversaries each way."""
    cfg, _ = load_game(fixture, seed, max_rounds=10_000)
    rows = {}
    ok = True
    for adv in adversaries("I"):
        r = martingale_drift(cfg, adv, Optimal("II"), min_rounds)
        good = r.mean <= 3 * r.stderr and r.min_slack >= -1e-9 and r.rounds >= min_rounds
        ok &= good
        rows[r.matchup] = dict(r.to_json(), passed=good)
    for adv in adversaries("II"):
        r = martingale_drift(cfg, Optimal("I"), adv, min_rounds)
        good = r.mean >= -3 * r.stderr and r.rounds >= min_rounds
        ok &= good
        rows[r.matchup] = dict(r.to_json(), passed=good)
    return CriterionResult(6, "martingale drifts under optimal play", ok, rows)


# Calibrated once on the shipped cone fixtures (largest observed
# sup-error / sqrt(eps) was 1.28, on the interval at eps = 0.0025) and frozen.
C_PRIME = 1.5
EPSILONS = (0.04, 0.01, 0.0025)


def cone_fixtures():
    seg = segment_tree(0.0, 2.0)
    return {
        "interval": (IntervalDomain(0.0, 1.0), ConeData(seg, (0.0,))),
        "rect": (RectDomain((0.0, 0.0, 1.0, 0.5)), ConeData(seg, (0.0, 0.0))),
    }


@_timed
def criterion_7(epsilons=EPSILONS, c_prime: float = C_PRIME, log=None) -> CriterionResult:
    """Cone data: sup-error <= C' sqrt(eps), strictly decreasing, metric constant within 2x of the coarsest."""
    out = {}
    ok = True
    for name, (space, data) in cone_fixtures().items():
        rows = convergence_report(space, data, epsilons, log=log)
        errs = [r.sup_error_or_cauchy for r in rows]
        consts = [r.metric_constant for r in rows]
        rate = all(e <= c_prime * math.sqrt(r.eps) for e, r in zip(errs, rows))
        decreasing = all(b < a for a, b in zip(errs, errs[1:]))
        metric = all(0.5 * consts[0] <= c <= 2 * consts[0] for c in consts)
        lip = all(r.lip_observed <= r.lip_bound + 1e-6 for r in rows)
        good = rate and decreasing and metric and lip
        ok &= good
        out[name] = {
            "rows": [r.to_json() for r in rows],
            "error_over_sqrt_eps": [e / math.sqrt(r.eps) for e, r in zip(errs, rows)],
            "within_rate": rate,
            "strictly_decreasing": decreasing,
            "metric_constant_stable": metric,
            "lip_bound_holds": lip,
        }
    return CriterionResult(7, "discretisation converges at the sqrt(eps) rate", ok, out)


@_timed
def criterion_8(n: int = 20, seed: int = 2) -> CriterionResult:
    """Graph-complex pipeline reproduces the direct extension bit for bit.

    Instances alternate between one and two subdivisions per edge; with two,
    the net graph is the subdivided graph and the comparison is against the
    extension computed on it directly.
    """
    mismatches = []
    for i in range(n):
        inst = random_instance(seed * 100_003 + i, max_vertices=12, max_tree_edges=7)
        G, T, f = inst.graph, inst.tree, inst.boundary
        s = 1 + i % 2
        H = G if s == 1 else subdivide(G)[0]
        direct = extend_inf_harmonic(H, T, f).values
        net = build_net(GraphComplexDomain(G, f, spacing=0.18, subdivisions=s), 0.1)
        sol = solve_net(net, ComplexData(T, f))
        same_graph = net.graph() == H
        same_vals = all(sol.values[k] == direct[v] for k, v in enumerate(net.ids))
        if not (same_graph and same_vals):
            mismatches.append((i, s, same_graph, same_vals))
    return CriterionResult(8, "graph-complex pipeline is exact", not mismatches, {"instances": n, "mismatches": mismatches})


def run_all(log=None) -> list[CriterionResult]:
    suite = run_extension_suite()
    return [
        criterion_1(suite=suite),
        criterion_2(),
        criterion_3(),
        criterion_4(suite=suite),
        criterion_5(),
        criterion_6(),
        criterion_7(log=log),
        criterion_8(),
    ]


REPRO = {
    "extension": criterion_1,
    "amle-crossval": criterion_2,
    "plane-example": criterion_3,
    "tie-break": criterion_4,
    "politics-value": criterion_5,
    "politics-path": lambda seed=0: criterion_5(seed=seed, names=("politics_path",)),
    "drift": criterion_6,
    "convergence": criterion_7,
    "pipeline": criterion_8,
}

# experiments whose randomness is controlled by a ``seed`` argument
SEEDED = frozenset({"extension", "amle-crossval", "tie-break", "politics-value", "politics-path", "drift", "pipeline"})
