"""Command-line front end.

Exit codes: 0 success or certified, 1 a mathematical violation was found
(details as JSON on standard output), 2 input or usage error.  Diagnostics go
to standard error.
"""

from __future__ import annotations

import argparse
import csv
import io as _io
import json
import math
import sys
from importlib import metadata
from pathlib import Path
from typing import Sequence

from . import io
from .amle import InterpolatedMap, Probe, is_amle_exhaustive, is_amle_via_harmonicity, t_comparison_check
from .discretize import (
    AnchorData,
    ComplexData,
    ConeData,
    GraphComplexDomain,
    IntervalDomain,
    RectDomain,
    convergence_report,
    write_report_csv,
)
from .errors import ExtensionInvariantError, InputError, InvariantViolation, StrategyFault, UnsupportedOperation
from .harmonic import POLICIES, extend_inf_harmonic, harmonic_violations, lipschitz_constant
from .politics import GameConfig, Lazy, Optimal, RandomPlay, Reversed, estimate_value, simulate_game, vertex_amle
from .targets import MetricTree, segment_tree


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def _clean(obj):
    """Make a result strict-JSON: non-finite floats become null or "inf"/"-inf"."""
    if isinstance(obj, float):
        if math.isnan(obj):
            return None
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


class RunManifest:
    """Command, full parameter set, seed, library version and input digests of one run."""

    def __init__(self, command: str, argv: Sequence[str], params: dict, seed: int | None, inputs: dict[str, str]):
        self.command = command
        self.argv = list(argv)
        self.params = params
        self.seed = seed
        self.version = _version()
        self.inputs = inputs

    def to_json(self) -> dict:
        return {
            "command": self.command,
            "argv": self.argv,
            "parameters": self.params,
            "seed": self.seed,
            "version": self.version,
            "inputs": self.inputs,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "RunManifest":
        m = cls(obj["command"], obj["argv"], obj["parameters"], obj.get("seed"), obj.get("inputs", {}))
        m.version = obj.get("version", m.version)
        return m


_INPUT_FLAGS = ("graph", "target", "boundary", "map", "terminal", "probes", "points", "Y")


def _manifest(args: argparse.Namespace, argv: Sequence[str]) -> RunManifest:
    params = {k: v for k, v in vars(args).items() if k not in ("func", "manifest")}
    inputs = {}
    for k in _INPUT_FLAGS:
        path = getattr(args, k, None)
        if path:
            inputs[str(path)] = io.file_digest(path)
    return RunManifest(args.command, argv, _clean(params), getattr(args, "seed", None), inputs)


def replay(manifest: dict | str | Path, out=None) -> int:
    """Re-run the command recorded in a manifest (dict or path)."""
    obj = io.read_json(manifest) if isinstance(manifest, (str, Path)) else manifest
    argv = [a for a in RunManifest.from_json(obj).argv]
    if "--manifest" in argv:
        i = argv.index("--manifest")
        del argv[i:i + 2]
    return main(argv, out=out)


# ---------------------------------------------------------------- helpers
def _emit(args, obj, out) -> None:
    text = io.dumps(_clean(obj))
    if getattr(args, "out", None):
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    else:
        out.write(text + "\n")


def _load_instance(args):
    G = io.load_graph(args.graph)
    T = io.load_target(args.target)
    return G, T


def _load_values(args, T, G, path_attr: str):
    return io.load_map(getattr(args, path_attr), T, G, key=path_attr)


def _complete_map(G, vals) -> None:
    missing = [v for v in G.vertices if v not in vals]
    if missing:
        raise InputError(f"map has no value at {missing[:5]}; a full vertex map is required")


def _floats(text: str, what: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise InputError(f"{what}: expected comma-separated numbers, got {text!r}") from None


# --------------------------------------------------------------- commands
def cmd_extend(args, out) -> int:
    G, T = _load_instance(args)
    f, omega = _load_values(args, T, G, "boundary")
    ext = extend_inf_harmonic(G, T, {v: f[v] for v in omega}, args.policy)
    obj = io.map_to_json(T, ext.values, omega)
    obj["lipschitz"] = lipschitz_constant(T, ext.values, G.vertices, G)
    if args.trace:
        obj["trace"] = [
            {"vertex": s.vertex, "case": s.case, "L": s.L, "pair": list(s.pair) if s.pair else None}
            for s in ext.trace
        ]
    _emit(args, obj, out)
    return 0


def cmd_interpolate(args, out) -> int:
    G, T = _load_instance(args)
    vals, _ = _load_values(args, T, G, "map")
    _complete_map(G, vals)
    F = InterpolatedMap(G, T, vals)
    raw = io.read_json(args.points)
    if not isinstance(raw, list):
        raise InputError("points file must hold a JSON list of graph points")
    rows = []
    for obj in raw:
        x = io.graph_point_from_json(G, obj)
        rows.append({"point": io.graph_point_to_json(x), "value": T.point_to_json(F.evaluate(x))})
    _emit(args, rows, out)
    return 0


def cmd_check_harmonic(args, out) -> int:
    G, T = _load_instance(args)
    vals, omega = _load_values(args, T, G, "map")
    _complete_map(G, vals)
    bad = harmonic_violations(G, T, vals, omega, args.tol)
    obj = {
        "harmonic": not bad,
        "violations": [
            {"vertex": c.vertex, "max_dist": c.max_dist, "pair": list(c.pair) if c.pair else None, "reason": c.reason}
            for c in bad
        ],
    }
    _emit(args, obj, out)
    return 0 if not bad else 1


def cmd_check_amle(args, out) -> int:
    G, T = _load_instance(args)
    vals, omega = _load_values(args, T, G, "map")
    _complete_map(G, vals)
    if args.mode == "harmonic":
        v = is_amle_via_harmonicity(G, omega, T, vals, args.tol)
        hf = v.harmonic_failure
        obj = {
            "amle": v.ok,
            "mode": "harmonic",
            "failure": None if hf is None else {"vertex": hf.vertex, "max_dist": hf.max_dist, "reason": hf.reason},
        }
    else:
        v = is_amle_exhaustive(G, omega, InterpolatedMap(G, T, vals), m=args.resolution, tol=args.tol)
        obj = {
            "amle": v.ok,
            "mode": "exhaustive",
            "sets_checked": v.checked,
            "violation": v.violation.to_json() if v.violation else None,
        }
    _emit(args, obj, out)
    return 0 if v.ok else 1


def _probe_from_json(G, T, obj) -> Probe:
    try:
        return Probe(T.point_from_json(obj["t"]), io.graph_point_from_json(G, obj["z"]), float(obj["b"]), float(obj["c"]), frozenset(obj["W"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed probe {obj!r}: {exc}") from None


def cmd_check_comparison(args, out) -> int:
    G, T = _load_instance(args)
    vals, omega = _load_values(args, T, G, "map")
    _complete_map(G, vals)
    F = InterpolatedMap(G, T, vals)
    probes = None
    if args.probes:
        raw = io.read_json(args.probes)
        if not isinstance(raw, list):
            raise InputError("probes file must hold a JSON list")
        probes = [_probe_from_json(G, T, p) for p in raw]
    v = t_comparison_check(F, omega, probes, m=args.resolution, tol=args.tol)
    obj = {"passed": v.ok, "probes_checked": v.probes_checked}
    if not v.ok:
        obj["probe"] = v.probe.to_json(T)
        obj["point"] = io.graph_point_to_json(v.point)
        obj["excess"] = v.excess
    _emit(args, obj, out)
    return 0 if v.ok else 1


_STRATEGIES = {
    "optimal": lambda role: Optimal(role),
    "random": lambda role: RandomPlay(),
    "lazy": lambda role: Lazy(),
    "reversed": lambda role: Reversed(role),
}


def _game_config(args) -> GameConfig:
    G = io.load_graph(args.graph)
    T = io.load_target(args.target)
    if not isinstance(T, MetricTree):
        raise InputError("the game needs a tree target")
    term, Y = _load_values(args, T, G, "terminal")
    t0 = T.point_from_json(io.parse_json(args.t0, "--t0"))
    return GameConfig(G, Y, T, term, args.x0, t0, args.max_rounds, args.seed)


def cmd_politics_estimate(args, out) -> int:
    cfg = _game_config(args)
    est = estimate_value(cfg, args.trials, args.jobs)
    obj = est.to_json()
    if args.format == "csv":
        buf = _io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(list(obj))
        w.writerow([repr(v) if isinstance(v, float) else v for v in obj.values()])
        _write_text(args, buf.getvalue(), out)
    else:
        _emit(args, obj, out)
    return 0


def cmd_politics_trace(args, out) -> int:
    cfg = _game_config(args)
    data = vertex_amle(cfg)
    T = cfg.tree
    lines = []

    def on_round(before, after):
        lines.append(json.dumps(_clean({
            "k": after.round,
            "x": after.x,
            "o": T.point_to_json(after.o),
            "t": T.point_to_json(after.t),
            "round_payoff": after.payoff - before.payoff,
            "monitored": after.monitored,
        }), sort_keys=True))

    I = _STRATEGIES[args.player_I]("I")
    II = _STRATEGIES[args.player_II]("II")
    res = simulate_game(cfg, I, II, args.trial, record=False, on_round=on_round)
    lines.append(json.dumps(_clean({
        "summary": {"payoff": res.payoff, "rounds": res.rounds, "censored": res.censored,
                    "formula": data.dist(data.values[cfg.x0], cfg.t0)},
    }), sort_keys=True))
    _write_text(args, "\n".join(lines) + "\n", out)
    return 0


def _write_text(args, text: str, out) -> None:
    if getattr(args, "out", None):
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        out.write(text)


def _euclidean_data(ydef: dict, tree: MetricTree | None, dim: int):
    """Boundary data from the ``data`` field of a Y file."""
    if "cone" in ydef:
        c = ydef["cone"]
        seg = tree if tree is not None else segment_tree(float(c.get("lo", 0.0)), float(c.get("hi", 2.0)))
        apex = tuple(float(a) for a in c.get("apex", [0.0] * dim))
        if len(apex) != dim:
            raise InputError(f"cone apex must have {dim} coordinates")
        return ConeData(seg, apex, float(c.get("slope", 1.0)), float(c.get("offset", 0.0)))
    if "anchors" in ydef:
        if tree is None:
            raise InputError("anchor data needs --target")
        anchors = tuple((tuple(float(x) for x in a["at"]), tree.point_from_json(a["value"])) for a in ydef["anchors"])
        return AnchorData(tree, anchors)
    raise InputError("Y file needs a 'cone' or 'anchors' data description")


def cmd_discretize(args, out) -> int:
    eps = _floats(args.epsilons, "--epsilons")
    tree = io.load_target(args.target) if args.target else None
    if tree is not None and not isinstance(tree, MetricTree):
        raise InputError("discretisation needs a tree target")
    if args.space == "complex":
        if not (args.graph and args.Y and tree is not None):
            raise InputError("--space complex needs --graph, --Y (a boundary map) and --target")
        G = io.load_graph(args.graph)
        f, omega = io.load_map(args.Y, tree, G, key="boundary")
        space = GraphComplexDomain(G, omega, args.spacing, args.subdivisions)
        data = ComplexData(tree, {v: f[v] for v in omega})
    else:
        ydef = io.read_json(args.Y) if args.Y else {"cone": {}}
        if not isinstance(ydef, dict):
            raise InputError("Y file must be a JSON object")
        if args.space == "interval":
            lo, hi = _floats(args.bounds, "--bounds") if args.bounds else (0.0, 1.0)
            space = IntervalDomain(lo, hi, ydef.get("points"))
            data = _euclidean_data(ydef.get("data", ydef), tree, 1)
        else:
            bounds = _floats(args.bounds, "--bounds") if args.bounds else (0.0, 0.0, 1.0, 0.5)
            if len(bounds) != 4:
                raise InputError("--bounds for a rectangle is x0,y0,x1,y1")
            space = RectDomain(bounds, ydef.get("arcs"), ydef.get("points", ()))
            data = _euclidean_data(ydef.get("data", ydef), tree, 2)
    log = (lambda s: print(s, file=sys.stderr)) if args.verbose else None
    rows = convergence_report(space, data, eps, solver=args.solver, log=log)
    if args.format == "csv" or args.report:
        buf = _io.StringIO()
        write_report_csv(rows, buf)
        if args.report:
            Path(args.report).write_text(buf.getvalue(), encoding="utf-8")
        if args.format == "csv":
            _write_text(args, buf.getvalue(), out)
            return 0
    _emit(args, [r.to_json() for r in rows], out)
    return 0


def cmd_repro(args, out) -> int:
    from . import repro

    if args.name == "all":
        results = repro.run_all()
    else:
        fn = repro.REPRO[args.name]
        kwargs = {"seed": args.seed} if args.seed is not None and args.name in repro.SEEDED else {}
        results = [fn(**kwargs)]
    for r in results:
        print(r.line(), file=sys.stderr)
    if args.format == "csv":
        buf = _io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["criterion", "title", "passed", "seconds"])
        for r in results:
            w.writerow([r.number, r.title, r.passed, f"{r.seconds:.3f}"])
        _write_text(args, buf.getvalue(), out)
    else:
        _emit(args, [r.to_json() for r in results], out)
    return 0 if all(r.passed for r in results) else 1


# ----------------------------------------------------------------- parser
class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(f"{self.prog}: error: {message}")


class _UsageError(Exception):
    pass


def _common(p, *, out=True, manifest=True):
    if out:
        p.add_argument("--out", help="write the result here instead of standard output")
    if manifest:
        p.add_argument("--manifest", help="also write a run manifest (JSON) to this path")


def _instance(p, map_flag: str):
    p.add_argument("--graph", required=True, help="graph JSON file")
    p.add_argument("--target", required=True, help="target JSON file")
    p.add_argument(f"--{map_flag}", required=True, help="vertex map JSON file")


def build_parser() -> argparse.ArgumentParser:
    from . import repro

    parser = _Parser(prog="treeamle", description="Tree-valued AMLE and infinity-harmonic extension toolkit.")
    parser.add_argument("--version", action="version", version=_version())
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("extend", help="infinity-harmonic extension of boundary data")
    _instance(p, "boundary")
    p.add_argument("--policy", choices=POLICIES, default="lex")
    p.add_argument("--trace", action="store_true", help="include the assignment order and constants")
    _common(p)
    p.set_defaults(func=cmd_extend)

    p = sub.add_parser("interpolate", help="evaluate the edgewise-geodesic interpolation at graph points")
    _instance(p, "map")
    p.add_argument("--points", required=True, help="JSON list of graph points")
    _common(p)
    p.set_defaults(func=cmd_interpolate)

    p = sub.add_parser("check-harmonic", help="infinity-harmonicity at every vertex outside the boundary")
    _instance(p, "map")
    p.add_argument("--tol", type=float, default=1e-9)
    _common(p)
    p.set_defaults(func=cmd_check_harmonic)

    p = sub.add_parser("check-amle", help="AMLE verification of the interpolated map")
    _instance(p, "map")
    p.add_argument("--mode", choices=("harmonic", "exhaustive"), default="harmonic")
    p.add_argument("--resolution", type=int, default=16, help="interior samples per edge")
    p.add_argument("--tol", type=float, default=1e-9)
    _common(p)
    p.set_defaults(func=cmd_check_amle)

    p = sub.add_parser("check-comparison", help="search for violations of comparison with cones")
    _instance(p, "map")
    p.add_argument("--probes", help="JSON list of probes {t, z, b, c, W}; generated when omitted")
    p.add_argument("--resolution", type=int, default=16)
    p.add_argument("--tol", type=float, default=1e-9)
    _common(p)
    p.set_defaults(func=cmd_check_comparison)

    p = sub.add_parser("politics", help="the Politics game")
    psub = p.add_subparsers(dest="action", parser_class=_Parser, metavar="ACTION")
    psub.required = True
    for name, func, hlp in (
        ("estimate", cmd_politics_estimate, "Monte-Carlo value under optimal play"),
        ("trace", cmd_politics_trace, "per-round JSON-lines trace of one game"),
    ):
        q = psub.add_parser(name, help=hlp)
        q.add_argument("--graph", required=True)
        q.add_argument("--target", required=True)
        q.add_argument("--terminal", required=True, help="terminal map; its boundary set is Y")
        q.add_argument("--x0", required=True, help="initial vertex")
        q.add_argument("--t0", required=True, help='initial target point as JSON, e.g. \'{"vertex":"p"}\'')
        q.add_argument("--seed", type=int, required=True)
        q.add_argument("--max-rounds", type=int, default=10_000)
        if name == "estimate":
            q.add_argument("--trials", type=int, default=100_000)
            q.add_argument("--jobs", type=int, default=1)
            q.add_argument("--format", choices=("json", "csv"), default="json")
        else:
            q.add_argument("--trial", type=int, default=0, help="trial index (selects the random stream)")
            q.add_argument("--player-I", dest="player_I", choices=sorted(_STRATEGIES), default="optimal")
            q.add_argument("--player-II", dest="player_II", choices=sorted(_STRATEGIES), default="optimal")
        _common(q)
        q.set_defaults(func=func)

    p = sub.add_parser("discretize", help="epsilon-net approximation and convergence report")
    p.add_argument("--space", choices=("interval", "rect", "complex"), required=True)
    p.add_argument("--bounds", help="lo,hi for an interval or x0,y0,x1,y1 for a rectangle")
    p.add_argument("--Y", help="Y and boundary data (JSON); a boundary map for --space complex")
    p.add_argument("--target", help="tree JSON file")
    p.add_argument("--graph", help="graph JSON file (complex spaces)")
    p.add_argument("--spacing", type=float, default=0.18)
    p.add_argument("--subdivisions", type=int, default=1)
    p.add_argument("--epsilons", default="0.04,0.01,0.0025")
    p.add_argument("--solver", choices=("auto", "exact", "relax"), default="auto")
    p.add_argument("--report", help="also write the CSV report here")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--verbose", action="store_true", help="progress on standard error")
    _common(p)
    p.set_defaults(func=cmd_discretize)

    p = sub.add_parser("repro", help="run an acceptance experiment")
    p.add_argument("name", choices=sorted(repro.REPRO) + ["all"])
    p.add_argument("--seed", type=int, help="override the experiment's fixed seed")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    _common(p)
    p.set_defaults(func=cmd_repro)
    return parser


def main(argv: Sequence[str] | None = None, out=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    try:
        code = args.func(args, out)
        if getattr(args, "manifest", None):
            Path(args.manifest).write_text(io.dumps(_manifest(args, argv).to_json()) + "\n", encoding="utf-8")
        return code
    except (InputError, UnsupportedOperation) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ExtensionInvariantError, InvariantViolation, StrategyFault) as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        out.write(io.dumps({"invariant_violation": type(exc).__name__, "message": str(exc)}) + "\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
