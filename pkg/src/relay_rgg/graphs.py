"""Graphs module.

Contains the backbone graph (`DetGraph`), the random geometric graph
(`RggInstance`), the combined graph (`GLocGraph`), breadth-first hop
distances and the distance-concentration event checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterator, NamedTuple

import numpy as np
from scipy.spatial.distance import cdist

from relay_rgg.enums import VertexTag
from relay_rgg.errors import GammaError, GeometryError, InvariantViolation, ParameterError
from relay_rgg.geometry import SCAN_MARGIN, GridIndex, Point, PointSet, grid_build, neighbors_within
from relay_rgg.logging import Logger

logger = Logger.get_logger(__name__)

UNREACHABLE = None
"""Hop distance between vertices that no path connects."""

LOWER_BOUND_SLACK = 1e-12
INTEGRAL_SNAP = 1e-9
PARALLEL_SHRINK = 0.9


class Vertex(NamedTuple):
    """A vertex of the combined graph: a backbone vertex or a relay point."""

    tag: VertexTag
    index: int

    @classmethod
    def backbone(cls, index: int) -> Vertex:
        """Return the backbone vertex with the given index.

        Parameters:
            index: Index in the backbone graph.

        Returns:
            The vertex.
        """
        return cls(VertexTag.BACKBONE, index)

    @classmethod
    def relay(cls, index: int) -> Vertex:
        """Return the relay vertex with the given index.

        Parameters:
            index: Index in the point set.

        Returns:
            The vertex.
        """
        return cls(VertexTag.RELAY, index)

    @property
    def is_backbone(self) -> bool:
        """Whether this is a backbone vertex."""
        return self.tag is VertexTag.BACKBONE

    def __str__(self) -> str:
        return f"{self.tag.value}{self.index}"


@dataclass(frozen=True)
class DetGraph:
    """Deterministic backbone graph drawn with straight edges inside the open unit square."""

    vertices: tuple[Point, ...]
    edges: tuple[tuple[int, int], ...]
    name: str = field(default="gamma", compare=False)

    def __post_init__(self) -> None:
        vertices = tuple(Point(float(x), float(y)) for x, y in self.vertices)
        edges = tuple((int(i), int(j)) for i, j in self.edges)
        object.__setattr__(self, "vertices", vertices)
        object.__setattr__(self, "edges", edges)
        messages = []
        for number, vertex in enumerate(vertices):
            if not vertex.inside(open_square=True):
                messages.append(f"vertex {number} at {tuple(vertex)} is not inside the open unit square")
        if len(set(vertices)) != len(vertices):
            messages.append("repeated vertex locations")
        seen = set()
        for number, (i, j) in enumerate(edges):
            if not (0 <= i < len(vertices) and 0 <= j < len(vertices)):
                messages.append(f"edge {number} references an unknown vertex")
            elif i == j:
                messages.append(f"edge {number} is a self-loop")
            elif frozenset((i, j)) in seen:
                messages.append(f"edge {number} is repeated")
            seen.add(frozenset((i, j)))
        if messages:
            raise GammaError("\n".join(messages))

    @property
    def v0(self) -> int:
        """Vertex count."""
        return len(self.vertices)

    @property
    def e0(self) -> int:
        """Edge count."""
        return len(self.edges)

    @cached_property
    def coords(self) -> np.ndarray:
        """Vertex coordinates as a (v0, 2) array."""
        return np.array(self.vertices, dtype=float).reshape(-1, 2)

    @cached_property
    def lengths(self) -> np.ndarray:
        """Euclidean length of every edge."""
        return np.array([self.vertices[i].distance(self.vertices[j]) for i, j in self.edges])

    def length(self, edge: int) -> float:
        """Return the length l(f) of an edge.

        Parameters:
            edge: Edge index.

        Returns:
            The length.
        """
        return float(self.lengths[edge])

    @property
    def l0(self) -> float:
        """Minimum edge length."""
        return float(self.lengths.min()) if self.e0 else 0.0

    @property
    def l_up(self) -> float:
        """Maximum edge length."""
        return float(self.lengths.max()) if self.e0 else 0.0

    @property
    def l_tot(self) -> float:
        """Sum of edge lengths."""
        return float(self.lengths.sum())

    def shared_endvertex(self, first: int, second: int) -> int | None:
        """Return the endvertex shared by two distinct edges, if any.

        Parameters:
            first: An edge index.
            second: Another edge index.

        Returns:
            The shared vertex index, or None.
        """
        common = set(self.edges[first]) & set(self.edges[second])
        return common.pop() if common else None


def parse_gamma(text: str, name: str = "gamma") -> DetGraph:
    """Parse the backbone text format.

    Lines `v <x> <y>` declare vertices in order, lines `e <i> <j>` declare
    edges between 1-based vertex numbers; `#` starts a comment.

    Parameters:
        text: The file contents.
        name: Name given to the graph.

    Raises:
        GammaError: When a line cannot be parsed.

    Returns:
        The backbone graph.
    """
    vertices: list[tuple[float, float]] = []
    edges: list[tuple[int, int]] = []
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        kind, *values = line.split()
        try:
            if kind == "v" and len(values) == 2:  # noqa: PLR2004
                vertices.append((float(values[0]), float(values[1])))
            elif kind == "e" and len(values) == 2:  # noqa: PLR2004
                edges.append((int(values[0]) - 1, int(values[1]) - 1))
            else:
                raise GammaError(f"line {number}: cannot parse {raw!r}")
        except ValueError as error:
            raise GammaError(f"line {number}: {error}") from error
    return DetGraph(tuple(Point(*v) for v in vertices), tuple(edges), name=name)


def load_gamma(path: str | Path) -> DetGraph:
    """Read a backbone graph file.

    Parameters:
        path: Path to the file.

    Raises:
        GammaError: When the file does not exist or is invalid.

    Returns:
        The backbone graph.
    """
    path = Path(path)
    if not path.is_file():
        raise GammaError(f"{path} is not a readable backbone file")
    logger.info(f"Read backbone graph from {path}")
    return parse_gamma(path.read_text(), name=path.stem)


def gamma_segment(d: float) -> DetGraph:
    """Return a single horizontal edge of length `d` centred at the origin.

    Parameters:
        d: Edge length, below 1.

    Returns:
        The backbone graph.
    """
    return DetGraph((Point(-d / 2, 0.0), Point(d / 2, 0.0)), ((0, 1),), name=f"segment-{d}")


def gamma_star(k: int, length: float = 0.3) -> DetGraph:
    """Return `k` edges of the given length leaving the origin at equal angles.

    Parameters:
        k: Number of edges.
        length: Length of each edge.

    Raises:
        GammaError: When `k` is not positive.

    Returns:
        The backbone graph.
    """
    if k < 1:
        raise GammaError(f"a star needs at least one edge, got {k}")
    leaves = [Point(length * math.cos(2 * math.pi * j / k), length * math.sin(2 * math.pi * j / k)) for j in range(k)]
    return DetGraph((Point(0.0, 0.0), *leaves), tuple((0, j + 1) for j in range(k)), name=f"star-{k}")


def gamma_parallel_example(m: int) -> DetGraph:
    """Return `m` parallel vertical edges spaced 1/m apart, each of length 2/m.

    The vertices `((i-1)/m, 0)` and `((i-1)/m, 2/m)` are shifted by (-1/2, -1/2)
    and shrunk by 0.9 about the origin so that they lie in the open square.

    Parameters:
        m: Number of edges.

    Raises:
        GammaError: When `m < 2`.

    Returns:
        The backbone graph.
    """
    if m < 2:  # noqa: PLR2004
        raise GammaError(f"the parallel example needs m >= 2, got {m}")

    def place(x: float, y: float) -> Point:
        return Point(PARALLEL_SHRINK * (x - 0.5), PARALLEL_SHRINK * (y - 0.5))

    vertices = []
    for i in range(m):
        vertices.extend((place(i / m, 0.0), place(i / m, 2 / m)))
    return DetGraph(tuple(vertices), tuple((2 * i, 2 * i + 1) for i in range(m)), name=f"parallel-{m}")


def gamma_builtin(spec: str) -> DetGraph:
    """Build a backbone graph from a builtin description.

    Supported: `segment <d>`, `star <k> [<length>]`, `parallel <m>`.

    Parameters:
        spec: The description.

    Raises:
        GammaError: When the description is unknown.

    Returns:
        The backbone graph.
    """
    kind, *args = spec.split()
    try:
        if kind == "segment" and len(args) == 1:
            return gamma_segment(float(args[0]))
        if kind == "star" and len(args) in {1, 2}:
            return gamma_star(int(args[0]), *(float(arg) for arg in args[1:]))
        if kind == "parallel" and len(args) == 1:
            return gamma_parallel_example(int(args[0]))
    except ValueError as error:
        raise GammaError(f"invalid builtin backbone {spec!r}: {error}") from error
    raise GammaError(f"unknown builtin backbone {spec!r}")


@dataclass(frozen=True)
class RggInstance:
    """Random geometric graph: i ~ j iff i != j and |X_i - X_j| <= r_n."""

    points: PointSet
    r_n: float
    index: GridIndex

    def neighbors(self, i: int) -> np.ndarray:
        """Return the neighbors of point `i`.

        Parameters:
            i: Point index.

        Returns:
            Sorted neighbor indices.
        """
        found = neighbors_within(self.index, self.points[i], self.r_n)
        return found[found != i]

    @cached_property
    def edges(self) -> np.ndarray:
        """All edges as an (m, 2) array of index pairs `i < j`."""
        return self.index.pairs_within(self.r_n)


def build_rgg(points: PointSet, r_n: float) -> RggInstance:
    """Build the random geometric graph with adjacency distance `r_n`.

    Parameters:
        points: The vertex locations.
        r_n: Adjacency distance.

    Raises:
        GeometryError: When `r_n` is not positive.

    Returns:
        The graph.
    """
    if not r_n > 0:
        raise GeometryError(f"adjacency distance must be positive, got {r_n!r}")
    return RggInstance(points, r_n, grid_build(points, r_n + 2 * SCAN_MARGIN))


@dataclass(frozen=True)
class GLocGraph:
    """The RGG plus edges from every backbone vertex to the points within `r_n`.

    Backbone vertices are never adjacent to each other.
    """

    rgg: RggInstance
    gamma: DetGraph

    @property
    def r_n(self) -> float:
        """Adjacency distance."""
        return self.rgg.r_n

    @property
    def n(self) -> int:
        """Number of relay vertices."""
        return self.rgg.points.n

    def check(self, vertex: Vertex) -> None:
        """Raise if a vertex does not belong to the graph.

        Parameters:
            vertex: The vertex.

        Raises:
            ParameterError: When the vertex is unknown.
        """
        size = self.gamma.v0 if vertex.is_backbone else self.n
        if not 0 <= vertex.index < size:
            raise ParameterError(f"unknown vertex {vertex}")

    def location(self, vertex: Vertex) -> Point:
        """Return the location of a vertex.

        Parameters:
            vertex: The vertex.

        Returns:
            Its point.
        """
        self.check(vertex)
        return self.gamma.vertices[vertex.index] if vertex.is_backbone else self.rgg.points[vertex.index]

    def relays_near(self, backbone: int) -> np.ndarray:
        """Return the relay points adjacent to a backbone vertex.

        Parameters:
            backbone: Backbone vertex index.

        Returns:
            Sorted point indices.
        """
        return neighbors_within(self.rgg.index, self.gamma.vertices[backbone], self.r_n)

    def backbones_near(self, relays: np.ndarray) -> np.ndarray:
        """Return the backbone vertices adjacent to at least one of the given relays.

        Parameters:
            relays: Point indices.

        Returns:
            Sorted backbone indices.
        """
        if not relays.size or not self.gamma.v0:
            return np.empty(0, dtype=np.intp)
        sq = cdist(self.rgg.points.coords[relays], self.gamma.coords, "sqeuclidean")
        return np.nonzero((sq <= self.r_n * self.r_n).any(axis=0))[0]

    def neighbors(self, vertex: Vertex) -> list[Vertex]:
        """Return the neighbors of a vertex.

        Parameters:
            vertex: The vertex.

        Returns:
            Backbone neighbors first, then relay neighbors, each sorted by index.
        """
        self.check(vertex)
        if vertex.is_backbone:
            return [Vertex.relay(int(i)) for i in self.relays_near(vertex.index)]
        own = np.array([vertex.index])
        return [Vertex.backbone(int(b)) for b in self.backbones_near(own)] + [
            Vertex.relay(int(i)) for i in self.rgg.neighbors(vertex.index)
        ]

    @cached_property
    def backbone_edges(self) -> np.ndarray:
        """All (backbone, relay) adjacent pairs as an (m, 2) array."""
        pairs = [(b, int(i)) for b in range(self.gamma.v0) for i in self.relays_near(b)]
        return np.array(pairs, dtype=np.intp).reshape(-1, 2)

    def edges(self) -> Iterator[tuple[Vertex, Vertex]]:
        """Iterate over every edge of the combined graph.

        Yields:
            Backbone-relay edges, then relay-relay edges.
        """
        for b, i in self.backbone_edges:
            yield Vertex.backbone(int(b)), Vertex.relay(int(i))
        for i, j in self.rgg.edges:
            yield Vertex.relay(int(i)), Vertex.relay(int(j))


def build_gloc(rgg: RggInstance, gamma: DetGraph) -> GLocGraph:
    """Combine an RGG and a backbone graph.

    Parameters:
        rgg: The random geometric graph.
        gamma: The backbone graph.

    Returns:
        The combined graph.
    """
    return GLocGraph(rgg, gamma)


def _bfs(gloc: GLocGraph, source: Vertex, target: Vertex, *, backbone_interior: bool) -> int | None:
    gloc.check(source)
    gloc.check(target)
    if source == target:
        return 0
    seen_relays = np.zeros(gloc.n, dtype=bool)
    seen_backbones = np.zeros(gloc.gamma.v0, dtype=bool)
    frontier_relays = np.empty(0, dtype=np.intp)
    frontier_backbones = np.empty(0, dtype=np.intp)
    if source.is_backbone:
        seen_backbones[source.index] = True
        frontier_backbones = np.array([source.index])
    else:
        seen_relays[source.index] = True
        frontier_relays = np.array([source.index])
    hops = 0
    while frontier_relays.size or frontier_backbones.size:
        hops += 1
        found = [neighbors_within(gloc.rgg.index, gloc.rgg.points[int(i)], gloc.r_n) for i in frontier_relays]
        found += [gloc.relays_near(int(b)) for b in frontier_backbones]
        next_relays = np.unique(np.concatenate(found)) if found else np.empty(0, dtype=np.intp)
        next_relays = next_relays[~seen_relays[next_relays]]
        next_backbones = gloc.backbones_near(frontier_relays)
        next_backbones = next_backbones[~seen_backbones[next_backbones]]
        if target.is_backbone and target.index in next_backbones:
            return hops
        if not target.is_backbone and seen_relays.size and target.index in next_relays:
            return hops
        if not backbone_interior:
            next_backbones = np.empty(0, dtype=np.intp)
        seen_relays[next_relays] = True
        seen_backbones[next_backbones] = True
        frontier_relays, frontier_backbones = next_relays, next_backbones
    return UNREACHABLE


def graph_distance(gloc: GLocGraph, s: Vertex, t: Vertex) -> int | None:
    """Return the minimum hop count between two vertices of the combined graph.

    Parameters:
        gloc: The combined graph.
        s: Source vertex.
        t: Target vertex.

    Returns:
        The hop count, or `UNREACHABLE`.
    """
    return _bfs(gloc, s, t, backbone_interior=True)


def relay_distance(gloc: GLocGraph, u: Vertex | int, v: Vertex | int) -> int | None:
    """Return the minimum hop count of a relay path between two backbone vertices.

    Interior vertices of a relay path are relay points only.

    Parameters:
        gloc: The combined graph.
        u: First backbone vertex.
        v: Second backbone vertex.

    Raises:
        ParameterError: When `u` and `v` are equal or not backbone vertices.

    Returns:
        The hop count, or `UNREACHABLE`.
    """
    u = u if isinstance(u, Vertex) else Vertex.backbone(u)
    v = v if isinstance(v, Vertex) else Vertex.backbone(v)
    if not (u.is_backbone and v.is_backbone) or u == v:
        raise ParameterError(f"relay distance needs two distinct backbone vertices, got {u} and {v}")
    return _bfs(gloc, u, v, backbone_interior=False)


def two_point_target(d: float, r_n: float) -> int:
    """Return the smallest integer strictly larger than `d / r_n`.

    Ratios within a relative 1e-9 of an integer count as that integer.

    Parameters:
        d: Euclidean distance.
        r_n: Adjacency distance.

    Raises:
        ParameterError: When an input is not positive.

    Returns:
        The integer target `d_uv`.
    """
    if not (d > 0 and r_n > 0):
        raise ParameterError(f"distance and adjacency distance must be positive, got {d!r} and {r_n!r}")
    ratio = d / r_n
    nearest = round(ratio)
    if math.isclose(ratio, nearest, rel_tol=INTEGRAL_SNAP):
        return nearest + 1
    return math.floor(ratio) + 1


@dataclass(frozen=True)
class DistanceEventOutcome:
    """Outcome of the distance-concentration events for one pair."""

    d_gr: int | None
    d_euclid: float
    d_uv: int
    E_uv: bool  # noqa: N815
    F_uv: bool  # noqa: N815

    @property
    def reachable(self) -> bool:
        """Whether a relay path exists."""
        return self.d_gr is not UNREACHABLE


def distance_events(d_gr: int | None, d_euclid: float, r_n: float, eps: float) -> DistanceEventOutcome:
    """Evaluate the ratio event E and the two-point event F for a hop distance.

    Parameters:
        d_gr: Relay hop distance, or `UNREACHABLE`.
        d_euclid: Euclidean distance.
        r_n: Adjacency distance.
        eps: Ratio slack of event E.

    Raises:
        ParameterError: When `eps` is not positive.

    Returns:
        The outcome.
    """
    if not eps > 0:
        raise ParameterError(f"eps must be positive, got {eps!r}")
    d_uv = two_point_target(d_euclid, r_n)
    if d_gr is UNREACHABLE:
        return DistanceEventOutcome(d_gr, d_euclid, d_uv, E_uv=False, F_uv=False)
    ratio_ok = d_gr <= (d_euclid / r_n) * (1 + eps) * (1 + INTEGRAL_SNAP)
    return DistanceEventOutcome(d_gr, d_euclid, d_uv, E_uv=ratio_ok, F_uv=d_gr in {d_uv, d_uv + 1})


def check_distance_events(gloc: GLocGraph, u: Vertex | int, v: Vertex | int, eps: float) -> DistanceEventOutcome:
    """Compute the relay distance between two backbone vertices and its events.

    Parameters:
        gloc: The combined graph.
        u: First backbone vertex.
        v: Second backbone vertex.
        eps: Ratio slack of event E.

    Raises:
        InvariantViolation: When the hop distance beats the Euclidean lower bound.

    Returns:
        The outcome.
    """
    d_gr = relay_distance(gloc, u, v)
    d_euclid = gloc.location(u if isinstance(u, Vertex) else Vertex.backbone(u)).distance(
        gloc.location(v if isinstance(v, Vertex) else Vertex.backbone(v)),
    )
    if d_gr is not UNREACHABLE and d_gr * gloc.r_n < d_euclid - LOWER_BOUND_SLACK:
        raise InvariantViolation(f"{d_gr} hops of length {gloc.r_n} cannot cover distance {d_euclid}")
    return distance_events(d_gr, d_euclid, gloc.r_n, eps)
