import io
import json

import pytest

from treeamle.cli import main, replay
from treeamle.graphs import SimplicialGraph
from treeamle.io import PartialVertexMap, fixture_path, load_fixture, map_from_json, map_to_json
from treeamle.targets import MetricTree, target_from_json


def run(argv):
    out = io.StringIO()
    code = main(argv, out=out)
    return code, out.getvalue()


def fx(name):
    return str(fixture_path(name))


def instance_flags(name, map_flag):
    p = fx(name)
    return ["--graph", p, "--target", p, f"--{map_flag}", p]


def test_extend_path_fixture_matches_expected():
    code, out = run(["extend", *instance_flags("path_extension", "boundary")])
    assert code == 0
    data = load_fixture("path_extension")
    T = MetricTree.from_json(data["target"])
    got, _ = map_from_json(T, json.loads(out))
    want, _ = map_from_json(T, data["expected"])
    assert got == want


def test_check_amle_exhaustive_on_plane_example_reports_violation():
    code, out = run(["check-amle", "--mode", "exhaustive", *instance_flags("plane_example", "map")])
    assert code == 1
    report = json.loads(out)
    assert report["amle"] is False
    assert report["violation"]["lip_open"] > report["violation"]["lip_boundary"]
    assert set(report["violation"]["core"]) <= {"A", "B", "C", "S1", "S2", "S3", "S4", "S5", "S6"}


def test_check_amle_harmonic_mode_refuses_plane():
    code, _ = run(["check-amle", "--mode", "harmonic", *instance_flags("plane_example", "map")])
    assert code == 2


def test_check_harmonic_on_plane_example_passes():
    code, out = run(["check-harmonic", *instance_flags("plane_example", "map")])
    assert code == 0 and json.loads(out)["harmonic"] is True


def test_repro_politics_path():
    code, out = run(["repro", "politics-path"])
    assert code == 0
    row = json.loads(out)[0]["details"]["politics_path"]
    assert abs(row["mean"] - 1.5) <= 3 * row["stderr"]


def test_unknown_subcommand_is_usage_error(capsys):
    code, out = run(["frobnicate"])
    assert code == 2 and out == ""
    assert "invalid choice" in capsys.readouterr().err


def test_missing_seed_is_usage_error():
    p = fx("politics_path")
    code, _ = run(["politics", "estimate", "--graph", p, "--target", p, "--terminal", p, "--x0", "1", "--t0", '{"vertex": "a"}'])
    assert code == 2


def test_missing_file_is_input_error(capsys):
    code, _ = run(["extend", "--graph", "/nonexistent.json", "--target", "x", "--boundary", "y"])
    assert code == 2
    assert "cannot read" in capsys.readouterr().err


def test_bad_point_json_is_input_error(tmp_path):
    p = fx("politics_path")
    code, _ = run(["politics", "estimate", "--graph", p, "--target", p, "--terminal", p, "--x0", "1", "--t0", "{oops", "--seed", "1"])
    assert code == 2


def test_politics_estimate_csv_and_determinism():
    p = fx("politics_tripod")
    data = load_fixture("politics_tripod")
    args = ["politics", "estimate", "--graph", p, "--target", p, "--terminal", p,
            "--x0", data["x0"], "--t0", json.dumps(data["t0"]), "--trials", "3000", "--seed", "9"]
    a = run(args)
    b = run(args + ["--jobs", "2"])
    assert a == b and a[0] == 0
    code, out = run(args + ["--format", "csv"])
    header, row = out.strip().splitlines()
    assert header.split(",")[0] == "mean"


def test_politics_trace_is_json_lines():
    p = fx("politics_grid")
    data = load_fixture("politics_grid")
    code, out = run(["politics", "trace", "--graph", p, "--target", p, "--terminal", p,
                     "--x0", data["x0"], "--t0", json.dumps(data["t0"]), "--seed", "4", "--player-I", "random"])
    assert code == 0
    lines = [json.loads(line) for line in out.splitlines()]
    rounds, summary = lines[:-1], lines[-1]["summary"]
    assert [r["k"] for r in rounds] == list(range(1, len(rounds) + 1))
    assert set(rounds[0]) == {"k", "x", "o", "t", "round_payoff", "monitored"}
    assert summary["rounds"] == len(rounds)
    assert summary["payoff"] == pytest.approx(sum(r["round_payoff"] for r in rounds), abs=1e-9)


def test_manifest_replays_byte_identically(tmp_path):
    p = fx("politics_mixed")
    data = load_fixture("politics_mixed")
    man = tmp_path / "run.json"
    out1 = tmp_path / "a.json"
    out2 = tmp_path / "b.json"
    code = main(["politics", "estimate", "--graph", p, "--target", p, "--terminal", p, "--x0", data["x0"],
                 "--t0", json.dumps(data["t0"]), "--trials", "2000", "--seed", "3", "--out", str(out1), "--manifest", str(man)])
    assert code == 0
    m = json.loads(man.read_text())
    assert m["seed"] == 3 and m["command"] == "politics" and p in m["inputs"]
    m["argv"][m["argv"].index("--out") + 1] = str(out2)
    assert replay(m) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_interpolate_and_comparison(tmp_path):
    p = fx("path_extension")
    ext = tmp_path / "ext.json"
    assert main(["extend", "--graph", p, "--target", p, "--boundary", p, "--out", str(ext)]) == 0
    pts = tmp_path / "pts.json"
    pts.write_text(json.dumps([{"edge": ["1", "2"], "offset": 0.5}]))
    code, out = run(["interpolate", "--graph", p, "--target", p, "--map", str(ext), "--points", str(pts)])
    assert code == 0
    assert json.loads(out)[0]["value"] == {"edge": ["a", "b"], "offset": 1.5}
    code, out = run(["check-comparison", "--graph", p, "--target", p, "--map", str(ext)])
    assert code == 0 and json.loads(out)["passed"]


def test_discretize_csv_report(tmp_path):
    ydef = tmp_path / "y.json"
    ydef.write_text(json.dumps({"data": {"cone": {"apex": [0.0]}}}))
    rep = tmp_path / "r.csv"
    code, out = run(["discretize", "--space", "interval", "--Y", str(ydef), "--epsilons", "0.04,0.01", "--report", str(rep)])
    assert code == 0
    assert rep.read_text().splitlines()[0] == "epsilon,net_size,metric_discrepancy,lip_bound,sup_error_or_cauchy"
    assert len(json.loads(out)) == 2


def test_discretize_complex(tmp_path):
    p = fx("path_extension")
    code, out = run(["discretize", "--space", "complex", "--graph", p, "--target", p, "--Y", p, "--epsilons", "0.1"])
    assert code == 0
    assert json.loads(out)[0]["net_size"] == 4


def test_discretize_bad_eps():
    code, _ = run(["discretize", "--space", "interval", "--epsilons", "0.5"])
    assert code == 2


# ------------------------------------------------------------- round trips
@pytest.mark.parametrize("name", ["path_extension", "tripod_star", "box_multiple", "plane_example", "politics_mixed"])
def test_fixture_round_trips(name):
    data = load_fixture(name)
    G = SimplicialGraph.from_json(data["graph"])
    T = target_from_json(data["target"])
    assert SimplicialGraph.from_json(G.to_json()) == G
    assert target_from_json(T.to_json()).to_json() == T.to_json()
    key = next(k for k in ("boundary", "map", "terminal") if k in data)
    vals, omega = map_from_json(T, data[key], G)
    back, omega2 = map_from_json(T, json.loads(json.dumps(map_to_json(T, vals, omega))), G)
    assert back == vals and omega2 == omega
    pm = PartialVertexMap(T, vals, omega)
    assert PartialVertexMap.from_json(T, pm.to_json(), G) == pm
