"""Tests for the `graphs` module."""

from __future__ import annotations

import networkx as nx
import numpy as np
import pytest
from scipy.spatial.distance import cdist

from relay_rgg import graphs
from relay_rgg.errors import GammaError, GeometryError, InvariantViolation, ParameterError
from relay_rgg.geometry import DensitySpec, Point, PointSet, sample_points
from relay_rgg.graphs import (
    UNREACHABLE,
    DetGraph,
    GLocGraph,
    Vertex,
    build_gloc,
    build_rgg,
    check_distance_events,
    distance_events,
    gamma_builtin,
    gamma_parallel_example,
    gamma_segment,
    gamma_star,
    graph_distance,
    load_gamma,
    parse_gamma,
    relay_distance,
    two_point_target,
)
from tests import FIXTURES_DIR

TRIANGLE = DetGraph((Point(-0.2, 0.0), Point(0.2, 0.0), Point(0.0, 0.2)), ((0, 1), (1, 2)))


def to_networkx(gloc: GLocGraph) -> nx.Graph:
    """Convert a combined graph.

    Parameters:
        gloc: The combined graph.

    Returns:
        An undirected graph on `Vertex` nodes.
    """
    graph = nx.Graph()
    graph.add_nodes_from(Vertex.backbone(b) for b in range(gloc.gamma.v0))
    graph.add_nodes_from(Vertex.relay(i) for i in range(gloc.n))
    graph.add_edges_from(gloc.edges())
    return graph


def small_instance(seed: int, n: int = 10) -> GLocGraph:
    """Build a small random instance around the triangle backbone.

    Parameters:
        seed: Random seed.
        n: Number of relay points.

    Returns:
        The combined graph.
    """
    rng = np.random.default_rng(seed)
    coords = np.column_stack((rng.uniform(-0.3, 0.3, n), rng.uniform(-0.1, 0.3, n)))
    return build_gloc(build_rgg(PointSet(coords), 0.15), TRIANGLE)


@pytest.mark.parametrize(
    ("vertices", "edges", "message"),
    [
        (((0.0, 0.0), (0.5, 0.0)), ((0, 1),), "open unit square"),
        (((0.0, 0.0), (0.0, 0.0)), ((0, 1),), "repeated vertex"),
        (((0.0, 0.0), (0.1, 0.0)), ((0, 0),), "self-loop"),
        (((0.0, 0.0), (0.1, 0.0)), ((0, 1), (1, 0)), "repeated"),
        (((0.0, 0.0), (0.1, 0.0)), ((0, 2),), "unknown vertex"),
    ],
)
def test_det_graph_validation(vertices: tuple, edges: tuple, message: str) -> None:
    """Reject invalid backbone graphs.

    Parameters:
        vertices: Vertex coordinates.
        edges: Edges.
        message: Expected message part.
    """
    with pytest.raises(GammaError, match=message):
        DetGraph(vertices, edges)


def test_det_graph_lengths() -> None:
    """Derive edge counts and lengths."""
    gamma = DetGraph(((0.0, 0.0), (0.3, 0.0), (0.0, 0.4)), ((0, 1), (1, 2)))
    assert (gamma.v0, gamma.e0) == (3, 2)
    assert gamma.length(1) == pytest.approx(0.5)
    assert gamma.l0 == pytest.approx(0.3)
    assert gamma.l_up == pytest.approx(0.5)
    assert gamma.l_tot == pytest.approx(0.8)
    assert gamma.shared_endvertex(0, 1) == 1


def test_load_gamma_file() -> None:
    """Read a backbone file with 1-based edges and comments."""
    gamma = load_gamma(FIXTURES_DIR / "cherry.gamma")
    assert gamma.name == "cherry"
    assert gamma.edges == ((0, 1), (0, 2))
    assert gamma.vertices[2] == Point(0.0, 0.3)
    assert load_gamma(FIXTURES_DIR / "segment.gamma").l0 == pytest.approx(0.32)


def test_load_gamma_rejects_outside_vertex() -> None:
    """Refuse a file with a vertex on the boundary of the square."""
    with pytest.raises(GammaError, match="vertex 1"):
        load_gamma(FIXTURES_DIR / "outside.gamma")


def test_load_missing_gamma_file() -> None:
    """Name the missing path in the error."""
    with pytest.raises(GammaError, match="nowhere.gamma"):
        load_gamma(FIXTURES_DIR / "nowhere.gamma")


def test_parse_gamma_rejects_garbage() -> None:
    """Report the faulty line."""
    with pytest.raises(GammaError, match="line 2"):
        parse_gamma("v 0 0\nx 1 2\n")


def test_parallel_example_shapes() -> None:
    """Shrink the parallel example into the open square."""
    pair = gamma_parallel_example(2)
    assert pair.e0 == 2
    assert pair.lengths.tolist() == pytest.approx([0.9, 0.9])
    ten = gamma_parallel_example(10)
    assert ten.e0 == 10
    assert ten.l0 == pytest.approx(0.2 * 0.9)
    assert ten.l_up == pytest.approx(0.2 * 0.9)
    with pytest.raises(GammaError):
        gamma_parallel_example(1)


def test_builtin_backbones() -> None:
    """Build backbones from their descriptions."""
    assert gamma_builtin("segment 0.3") == gamma_segment(0.3)
    star = gamma_builtin("star 5 0.25")
    assert star == gamma_star(5, 0.25)
    assert star.e0 == 5
    assert star.lengths.tolist() == pytest.approx([0.25] * 5)
    assert gamma_builtin("parallel 3").e0 == 3
    with pytest.raises(GammaError):
        gamma_builtin("circle 3")
    with pytest.raises(GammaError):
        gamma_builtin("star many")


def test_build_rgg_close_pair() -> None:
    """Join two points at distance 0.05."""
    rgg = build_rgg(PointSet.of((0.0, 0.0), (0.05, 0.0)), 0.1)
    assert rgg.edges.tolist() == [[0, 1]]
    assert rgg.neighbors(0).tolist() == [1]


def test_build_rgg_far_pair() -> None:
    """Leave two points at distance 0.2 apart."""
    assert build_rgg(PointSet.of((0.0, 0.0), (0.2, 0.0)), 0.1).edges.size == 0


def test_build_rgg_rejects_non_positive_radius() -> None:
    """Refuse a zero adjacency distance."""
    with pytest.raises(GeometryError):
        build_rgg(PointSet.of((0.0, 0.0)), 0.0)


def test_build_rgg_matches_threshold_graph() -> None:
    """Find the edges of 200 random points like a full scan."""
    points = sample_points(200, DensitySpec.uniform(), np.random.default_rng(2))
    rgg = build_rgg(points, 0.15)
    close = np.triu(cdist(points.coords, points.coords) <= 0.15, k=1)
    assert {tuple(pair) for pair in rgg.edges.tolist()} == {(int(i), int(j)) for i, j in zip(*np.nonzero(close))}


def test_gloc_backbone_relay_edge() -> None:
    """Connect a backbone vertex to a close relay point."""
    gamma = DetGraph(((0.0, 0.0), (0.3, 0.3)), ())
    gloc = build_gloc(build_rgg(PointSet.of((0.05, 0.0)), 0.1), gamma)
    assert list(gloc.edges()) == [(Vertex.backbone(0), Vertex.relay(0))]


def test_gloc_has_no_backbone_backbone_edges() -> None:
    """Keep close backbone vertices apart."""
    gamma = DetGraph(((0.0, 0.0), (0.05, 0.0)), ((0, 1),))
    gloc = build_gloc(build_rgg(PointSet.of(), 0.1), gamma)
    assert list(gloc.edges()) == []
    assert relay_distance(gloc, 0, 1) is UNREACHABLE
    assert graph_distance(gloc, Vertex.backbone(0), Vertex.backbone(1)) is UNREACHABLE


def test_gloc_backbone_edges_match_scan() -> None:
    """Find the backbone-relay pairs of a random instance like a full scan."""
    points = sample_points(100, DensitySpec.uniform(), np.random.default_rng(4))
    gamma = gamma_star(4, 0.3)
    gloc = build_gloc(build_rgg(points, 0.1), gamma)
    close = cdist(gamma.coords, points.coords) <= 0.1
    assert {tuple(pair) for pair in gloc.backbone_edges.tolist()} == {(int(b), int(i)) for b, i in zip(*np.nonzero(close))}


def test_gloc_neighbors(forced_chain: GLocGraph) -> None:
    """List backbone neighbors before relay neighbors.

    Parameters:
        forced_chain: Fixture with one relay point between two backbone vertices.
    """
    assert forced_chain.neighbors(Vertex.backbone(0)) == [Vertex.relay(0)]
    assert forced_chain.neighbors(Vertex.relay(0)) == [Vertex.backbone(0), Vertex.backbone(1)]
    assert str(Vertex.backbone(1)) == "B1"
    with pytest.raises(ParameterError):
        forced_chain.neighbors(Vertex.relay(1))


def test_distance_to_itself(forced_chain: GLocGraph) -> None:
    """A vertex is at distance 0 from itself.

    Parameters:
        forced_chain: Fixture with one relay point between two backbone vertices.
    """
    assert graph_distance(forced_chain, Vertex.relay(0), Vertex.relay(0)) == 0


def test_forced_chain_distances(forced_chain: GLocGraph) -> None:
    """Go through the only relay point.

    Parameters:
        forced_chain: Fixture with one relay point between two backbone vertices.
    """
    assert graph_distance(forced_chain, Vertex.backbone(0), Vertex.backbone(1)) == 2
    assert relay_distance(forced_chain, 0, 1) == 2
    assert relay_distance(forced_chain, Vertex.backbone(1), Vertex.backbone(0)) == 2


def test_relay_distance_needs_two_backbone_vertices(forced_chain: GLocGraph) -> None:
    """Refuse equal or relay endpoints.

    Parameters:
        forced_chain: Fixture with one relay point between two backbone vertices.
    """
    with pytest.raises(ParameterError):
        relay_distance(forced_chain, 0, 0)
    with pytest.raises(ParameterError):
        relay_distance(forced_chain, Vertex.backbone(0), Vertex.relay(0))


@pytest.mark.parametrize("seed", range(100))
def test_distances_match_exhaustive_search(seed: int) -> None:
    """Compare breadth-first distances with path enumeration on small instances.

    Parameters:
        seed: Random seed.
    """
    gloc = small_instance(seed)
    graph = to_networkx(gloc)
    for s, t in ((0, 1), (1, 2), (0, 2)):
        u, v = Vertex.backbone(s), Vertex.backbone(t)
        paths = list(nx.all_simple_paths(graph, u, v))
        expected = min((len(path) - 1 for path in paths), default=UNREACHABLE)
        relay_paths = [path for path in paths if not any(vertex.is_backbone for vertex in path[1:-1])]
        expected_relay = min((len(path) - 1 for path in relay_paths), default=UNREACHABLE)
        assert graph_distance(gloc, u, v) == expected
        assert relay_distance(gloc, u, v) == expected_relay
        if expected_relay is not UNREACHABLE:
            assert expected_relay >= expected
    source, target = Vertex.relay(0), Vertex.relay(seed % 10)
    expected = nx.shortest_path_length(graph, source, target) if nx.has_path(graph, source, target) else UNREACHABLE
    assert graph_distance(gloc, source, target) == expected


@pytest.mark.parametrize(("d", "r_n", "expected"), [(0.3, 0.1, 4), (0.25, 0.1, 3), (0.299999, 0.1, 3), (0.32, 0.08, 5)])
def test_two_point_target(d: float, r_n: float, expected: int) -> None:
    """Return the smallest integer strictly above `d / r_n`.

    Parameters:
        d: Distance.
        r_n: Adjacency distance.
        expected: Expected target.
    """
    assert two_point_target(d, r_n) == expected
    assert 0 < expected - d / r_n <= 1 + 1e-9


def test_two_point_target_needs_positive_inputs() -> None:
    """Refuse non-positive distances."""
    with pytest.raises(ParameterError):
        two_point_target(0.0, 0.1)


def test_distance_events() -> None:
    """Evaluate both events for given hop counts."""
    five = distance_events(5, 0.3, 0.1, 0.25)
    assert five.d_uv == 4
    assert five.F_uv
    six = distance_events(6, 0.3, 0.1, 1.0)
    assert not six.F_uv
    assert six.E_uv
    assert not distance_events(6, 0.3, 0.1, 0.5).E_uv
    missing = distance_events(UNREACHABLE, 0.3, 0.1, 1.0)
    assert not missing.reachable
    assert not (missing.E_uv or missing.F_uv)
    with pytest.raises(ParameterError):
        distance_events(5, 0.3, 0.1, 0.0)


def test_check_distance_events(forced_chain: GLocGraph) -> None:
    """Compute the events of the forced chain.

    Parameters:
        forced_chain: Fixture with one relay point between two backbone vertices.
    """
    outcome = check_distance_events(forced_chain, 0, 1, 0.25)
    assert outcome.d_gr == 2
    assert outcome.d_euclid == pytest.approx(0.18)
    assert outcome.d_uv == 2
    assert outcome.E_uv
    assert outcome.F_uv


def test_check_distance_events_lower_bound(forced_chain: GLocGraph, monkeypatch: pytest.MonkeyPatch) -> None:
    """Fail loudly when a hop count beats the Euclidean lower bound.

    Parameters:
        forced_chain: Fixture with one relay point between two backbone vertices.
        monkeypatch: Pytest fixture to patch the hop distance.
    """
    monkeypatch.setattr(graphs, "relay_distance", lambda *_: 1)
    with pytest.raises(InvariantViolation):
        check_distance_events(forced_chain, 0, 1, 0.25)
