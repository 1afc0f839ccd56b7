"""Tree-valued absolutely minimal Lipschitz extensions on graphs.

Public entry points:

* :class:`MetricTree`, :class:`BoxTarget`, :class:`PlaneTarget`: targets.
* :class:`SimplicialGraph`: domain graphs.
* :func:`extend_inf_harmonic`: the constructive infinity-harmonic extension.
* :func:`is_amle_via_harmonicity`, :func:`is_amle_exhaustive`: verifiers.
* :mod:`treeamle.politics`: the Politics game simulator.
* :mod:`treeamle.discretize`: epsilon-net approximations.
"""

from .amle import InterpolatedMap, is_amle_exhaustive, is_amle_via_harmonicity, t_comparison_check
from .errors import ExtensionInvariantError, InputError, InvariantViolation, StrategyFault, UnsupportedOperation
from .graphs import GraphPoint, SimplicialGraph, external_distance, graph_distance, graph_point, subdivide
from .harmonic import extend_inf_harmonic, harmonic_violations, is_inf_harmonic_at, lipschitz_constant
from .io import PartialVertexMap
from .targets import BoxTarget, MetricTree, PlaneTarget, TreePoint, target_from_json

__all__ = [
    "BoxTarget",
    "ExtensionInvariantError",
    "GraphPoint",
    "InputError",
    "InterpolatedMap",
    "InvariantViolation",
    "MetricTree",
    "PartialVertexMap",
    "PlaneTarget",
    "SimplicialGraph",
    "StrategyFault",
    "TreePoint",
    "UnsupportedOperation",
    "extend_inf_harmonic",
    "external_distance",
    "graph_distance",
    "graph_point",
    "harmonic_violations",
    "is_amle_exhaustive",
    "is_amle_via_harmonicity",
    "is_inf_harmonic_at",
    "lipschitz_constant",
    "subdivide",
    "t_comparison_check",
    "target_from_json",
]
