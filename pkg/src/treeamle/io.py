"""JSON loading and writing shared by the CLI, fixtures and reproduction scripts.

A file may hold a single object (a graph, a target, a map) or a combined
fixture with keys ``graph``, ``target``, ``boundary`` / ``map``; loaders pick
the relevant key when it is present.
"""

from __future__ import annotations

import hashlib
import json
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

from .errors import InputError
from .graphs import GraphPoint, SimplicialGraph, graph_point
from .targets import target_from_json


def read_json(path: str | Path) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from None


def parse_json(text: str, what: str = "argument") -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{what}: invalid JSON ({exc})") from None


def dumps(obj: Any) -> str:
    """Canonical JSON (sorted keys, shortest round-trip floats)."""
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, indent=2)


def _section(obj: Any, *keys: str) -> Any:
    if isinstance(obj, dict):
        for k in keys:
            if k in obj:
                return obj[k]
    return obj


def load_graph(path: str | Path) -> SimplicialGraph:
    return SimplicialGraph.from_json(_section(read_json(path), "graph"))


def load_target(path: str | Path):
    obj = _section(read_json(path), "target")
    if not isinstance(obj, dict):
        raise InputError(f"{path}: target must be a JSON object")
    return target_from_json(obj)


def map_from_json(target, obj: Mapping, graph: SimplicialGraph | None = None) -> tuple[dict, frozenset]:
    """(values, omega) from ``{"Ω": [...], "values": {...}}``.

    ``Ω`` (also accepted as ``Omega``) lists the boundary vertices and
    defaults to the keys of ``values``.
    """
    if not isinstance(obj, Mapping) or "values" not in obj:
        raise InputError("map must be an object with a 'values' field")
    raw = obj["values"]
    if not isinstance(raw, Mapping):
        raise InputError("'values' must map vertices to points")
    vals = {str(v): target.point_from_json(p) for v, p in raw.items()}
    omega = frozenset(str(v) for v in obj.get("Ω", obj.get("Omega", list(raw))))
    if not omega <= vals.keys():
        raise InputError(f"boundary vertices without values: {sorted(omega - vals.keys())[:5]}")
    if graph is not None:
        for v in vals:
            graph._check(v)
    return vals, omega


def map_to_json(target, values: Mapping, omega) -> dict:
    return {
        "Ω": sorted(omega),
        "values": {v: target.point_to_json(values[v]) for v in sorted(values)},
    }


def load_map(path: str | Path, target, graph: SimplicialGraph | None = None, key: str = "map"):
    obj = _section(read_json(path), key, "map", "boundary")
    return map_from_json(target, obj, graph)


def graph_point_from_json(G: SimplicialGraph, obj) -> GraphPoint:
    if not isinstance(obj, Mapping):
        raise InputError(f"malformed graph point {obj!r}")
    if "vertex" in obj:
        return graph_point(G, str(obj["vertex"]))
    try:
        u, v = obj["edge"]
        return graph_point(G, str(u), str(v), float(obj["offset"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed graph point {obj!r}: {exc}") from None


def graph_point_to_json(p: GraphPoint) -> dict:
    if p.vertex is not None:
        return {"vertex": p.vertex}
    return {"edge": list(p.edge), "offset": p.offset}


def file_digest(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def fixture_path(name: str) -> Path:
    """Path of a shipped fixture file (``name`` without the .json suffix)."""
    p = resources.files("treeamle") / "fixtures" / f"{name}.json"
    if not p.is_file():
        raise InputError(f"unknown fixture {name!r}")
    return Path(str(p))


def load_fixture(name: str) -> dict:
    return read_json(fixture_path(name))


class PartialVertexMap:
    """Values on a subset of the vertices together with the boundary set they extend."""

    def __init__(self, target, values: Mapping, omega=None):
        self.target = target
        self.values = dict(values)
        self.omega = frozenset(self.values if omega is None else omega)

    @property
    def domain(self) -> frozenset:
        return frozenset(self.values)

    def __getitem__(self, v):
        try:
            return self.values[v]
        except KeyError:
            raise InputError(f"map undefined at {v!r}") from None

    def __eq__(self, other) -> bool:
        return isinstance(other, PartialVertexMap) and self.values == other.values and self.omega == other.omega

    def to_json(self) -> dict:
        return map_to_json(self.target, self.values, self.omega)

    @classmethod
    def from_json(cls, target, obj: Mapping, graph: SimplicialGraph | None = None) -> "PartialVertexMap":
        vals, omega = map_from_json(target, obj, graph)
        return cls(target, vals, omega)
