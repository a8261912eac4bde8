"""Relay RGG package.

Random geometric graphs over a deterministic backbone graph: relay paths
along backbone edges, their length and maximum weight, the bounds that
control their failure probabilities, and seeded Monte Carlo experiments.
"""

from __future__ import annotations

from relay_rgg.geometry import DensitySpec, GridIndex, Point, PointSet, sample_points
from relay_rgg.graphs import DetGraph, GLocGraph, RggInstance, Vertex, build_gloc, build_rgg
from relay_rgg.logging import Logger
from relay_rgg.relay import RelayPath, RelayRgg, build_relay_rgg
from relay_rgg.weights import WeightAssignment, assign_weights, build_max_weight_relay_rgg

__all__: list[str] = [
    "DensitySpec",
    "DetGraph",
    "GLocGraph",
    "GridIndex",
    "Logger",
    "Point",
    "PointSet",
    "RelayPath",
    "RelayRgg",
    "RggInstance",
    "Vertex",
    "WeightAssignment",
    "assign_weights",
    "build_gloc",
    "build_max_weight_relay_rgg",
    "build_relay_rgg",
    "build_rgg",
    "sample_points",
]
