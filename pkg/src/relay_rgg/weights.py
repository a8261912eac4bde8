"""Weights module.

Unit-mean exponential edge weights generated from vertex-pair keys, the
square-chain layout along a backbone edge, the greedy maximum-weight path
through it, the all-weights-small certificate and an exhaustive oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.spatial.distance import pdist

from relay_rgg.errors import ConstructionFailure, GeometryError, InstanceTooLargeError, InvariantViolation, ParameterError
from relay_rgg.geometry import HALF, Point, neighbors_within
from relay_rgg.graphs import DetGraph, GLocGraph, Vertex
from relay_rgg.logging import Logger
from relay_rgg.relay import HOP_SLACK, RelayPath, RelayRgg, validate_relay_rgg

logger = Logger.get_logger(__name__)

SQUARE_FRACTION = 10
SKIP = 4
ORACLE_LIMIT = 12
DEFAULT_M = 3.0
NO_PATH = None
"""Total weight reported by the oracle when no admissible path exists."""

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_MASK = (1 << 64) - 1


def _splitmix(values: np.ndarray) -> np.ndarray:
    z = values + _GOLDEN
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def vertex_ids(vertices: list[Vertex] | tuple[Vertex, ...]) -> np.ndarray:
    """Map vertices to integer identifiers: relay `i` to `2i`, backbone `k` to `2k + 1`.

    Parameters:
        vertices: The vertices.

    Returns:
        The identifiers.
    """
    return np.array([2 * v.index + int(v.is_backbone) for v in vertices], dtype=np.uint64)


@dataclass(frozen=True)
class WeightAssignment:
    """Weights of all vertex pairs as a pure function of a seed.

    The weight of a pair is `-log(u)` where `u` in (0, 1) is built from the
    top 53 bits of a splitmix64 hash of the seed and the ordered pair of
    identifiers; the pair order does not matter.
    """

    seed: int
    overrides: dict[tuple[int, int], float] = field(default_factory=dict, compare=False)

    def of_ids(self, first: np.ndarray, second: np.ndarray) -> np.ndarray:
        """Return the weights of pairs given by identifier arrays.

        Parameters:
            first: Identifiers of one end.
            second: Identifiers of the other end.

        Returns:
            The weights.
        """
        first = np.atleast_1d(np.asarray(first, dtype=np.uint64))
        second = np.atleast_1d(np.asarray(second, dtype=np.uint64))
        low, high = np.minimum(first, second), np.maximum(first, second)
        state = _splitmix(np.full(low.shape, self.seed & _MASK, dtype=np.uint64))
        state = _splitmix(state ^ low)
        state = _splitmix(state ^ high)
        uniform = ((state >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
        weights = -np.log(uniform)
        for (a, b), value in self.overrides.items():
            weights[(low == a) & (high == b)] = value
        return weights

    def weight(self, u: Vertex, v: Vertex) -> float:
        """Return the weight of the edge between two vertices.

        Parameters:
            u: One end.
            v: Other end.

        Returns:
            The weight.
        """
        ids = vertex_ids([u, v])
        return float(self.of_ids(ids[:1], ids[1:])[0])

    def from_vertex(self, u: Vertex, relays: np.ndarray) -> np.ndarray:
        """Return the weights of the edges from `u` to relay points.

        Parameters:
            u: The common end.
            relays: Relay indices.

        Returns:
            The weights.
        """
        source = vertex_ids([u])
        return self.of_ids(np.repeat(source, len(relays)), 2 * np.asarray(relays, dtype=np.uint64))

    def with_override(self, u: Vertex, v: Vertex, value: float) -> WeightAssignment:
        """Return a copy where one pair has a fixed weight.

        Parameters:
            u: One end.
            v: Other end.
            value: The weight.

        Returns:
            The new assignment.
        """
        a, b = sorted(int(i) for i in vertex_ids([u, v]))
        return WeightAssignment(self.seed, {**self.overrides, (a, b): value})


def assign_weights(seed: int) -> WeightAssignment:
    """Return the weight assignment of a seed.

    Parameters:
        seed: Master seed.

    Returns:
        The assignment.
    """
    return WeightAssignment(seed)


@dataclass(frozen=True)
class SquareChainLayout:
    """Squares of side `a = r_n / 10` winding along a backbone edge.

    Squares sit on columns spaced `4a` along the edge and rows spaced `4a`
    along the normal. The path goes up and down the columns in turn; the
    first square is centred on `u` and the last one on `v`. Only the gap
    before the last column may exceed `4a` (it stays below `8a`).
    """

    a: float
    rows: int
    columns: int
    centers: np.ndarray
    direction: tuple[float, float]
    normal: tuple[float, float]
    L_n: int  # noqa: N815
    irregular_gap_index: int | None = None

    @property
    def N(self) -> int:  # noqa: N802
        """Number of interior squares."""
        return len(self.centers) - 2

    @property
    def hops(self) -> int:
        """Hop count of a path through the layout."""
        return self.N + 1

    @property
    def in_band(self) -> bool:
        """Whether `N` lies between `L_n / 16` and `L_n / 8`."""
        return math.ceil(self.L_n / 16) <= self.N <= self.L_n // 8

    def contains(self, square: int, coords: np.ndarray) -> np.ndarray:
        """Tell which points lie in a square.

        Parameters:
            square: Square index.
            coords: An (m, 2) array of points.

        Returns:
            A boolean mask.
        """
        offset = coords - self.centers[square]
        half = self.a / 2 + HOP_SLACK
        return (np.abs(offset @ np.array(self.direction)) <= half) & (np.abs(offset @ np.array(self.normal)) <= half)


def _interior_count(rows: int, columns: int) -> int:
    first_column = rows if columns % 2 else 1
    return rows * columns + first_column - 2


def square_chain_layout(u: Point, v: Point, r_n: float, L_n: int) -> SquareChainLayout:  # noqa: N803
    """Lay out the squares of the greedy path along the edge `u -> v`.

    The row count is the smallest one giving at least `L_n / 16` interior
    squares.

    Parameters:
        u: Start of the edge.
        v: End of the edge.
        r_n: Adjacency distance.
        L_n: Hop budget.

    Raises:
        ParameterError: When `L_n` is below `l / r_n` or cannot hold the path.
        GeometryError: When the edge is too short or a square leaves the unit square.

    Returns:
        The layout.
    """
    start, end = np.array(u, dtype=float), np.array(v, dtype=float)
    length = float(np.linalg.norm(end - start))
    if L_n * r_n < length - HOP_SLACK:
        raise ParameterError(f"hop budget {L_n} is below l/r_n = {length / r_n:.6g}")
    a = r_n / SQUARE_FRACTION
    columns = math.floor(length / (SKIP * a) + 1e-9)
    if columns < 1:
        raise GeometryError(f"edge of length {length:.6g} is shorter than {SKIP * a:.6g}")
    direction = (end - start) / length
    normal = np.array([-direction[1], direction[0]])
    if float(np.dot(-(start + end) / 2, normal)) < -HOP_SLACK:
        normal = -normal
    floor = math.ceil(L_n / 16)
    rows = 1
    while _interior_count(rows, columns) < floor:
        rows += 1
    if _interior_count(rows, columns) + 1 > L_n:
        raise ParameterError(f"hop budget {L_n} cannot hold {_interior_count(rows, columns) + 1} hops")
    positions = [SKIP * a * c for c in range(columns)] + [length]
    order: list[tuple[float, int]] = []
    for c, s in enumerate(positions):
        upward = (columns - c) % 2 == 1
        if c == 0 and not upward:
            order.append((s, 0))
            continue
        column_rows = range(rows) if upward else range(rows - 1, -1, -1)
        order.extend((s, j) for j in column_rows)
    centers = np.array([start + s * direction + SKIP * a * j * normal for s, j in order])
    if np.abs(centers).max() + a / math.sqrt(2) > HALF:
        raise GeometryError(f"the square chain of {tuple(u)} -> {tuple(v)} leaves the unit square")
    gap = length - SKIP * a * (columns - 1)
    irregular = None
    if not math.isclose(gap, SKIP * a, rel_tol=1e-9):
        irregular = next(i for i, (s, _) in enumerate(order) if s == length)
    layout = SquareChainLayout(
        a=a,
        rows=rows,
        columns=columns,
        centers=centers,
        direction=(float(direction[0]), float(direction[1])),
        normal=(float(normal[0]), float(normal[1])),
        L_n=L_n,
        irregular_gap_index=irregular,
    )
    if not layout.in_band:
        logger.warning(f"{layout.N} interior squares fall outside [{floor}, {L_n // 8}] for L_n={L_n}")
    return layout


@dataclass(frozen=True)
class GreedyPathResult:
    """A greedy maximum-weight path and its hop weights."""

    path: RelayPath
    hop_weights: np.ndarray
    occupancy: tuple[int, ...] = ()

    @property
    def total(self) -> float:
        """Sum of the hop weights."""
        return float(self.hop_weights.sum())

    @property
    def min_hop_weight(self) -> float:
        """Smallest hop weight."""
        return float(self.hop_weights.min())


def build_greedy_max_weight_path(
    gloc: GLocGraph,
    weights: WeightAssignment,
    layout: SquareChainLayout,
    edge: int,
    forbidden: set[int] | None = None,
) -> GreedyPathResult:
    """Walk the square chain of a backbone edge taking the heaviest next edge each time.

    From the current vertex, the next vertex is the relay point of the next
    square that is not forbidden, lies within `r_n` and maximizes the edge
    weight (lowest index on ties). The last hop goes to the end of the edge.

    Parameters:
        gloc: The combined graph.
        weights: The weights.
        layout: The square chain of the edge.
        edge: Backbone edge index.
        forbidden: Relay indices that may not be used.

    Raises:
        ConstructionFailure: When a square holds no eligible point.

    Returns:
        The path and its weights.
    """
    forbidden = forbidden or set()
    a, b = gloc.gamma.edges[edge]
    coords = gloc.rgg.points.coords
    current = Vertex.backbone(a)
    here = np.array(gloc.location(current))
    vertices = [current]
    hop_weights = []
    occupancy = []
    for square in range(1, layout.N + 1):
        around = neighbors_within(gloc.rgg.index, layout.centers[square], layout.a / math.sqrt(2) + HOP_SLACK)
        inside = around[layout.contains(square, coords[around])] if around.size else around
        eligible = np.array([i for i in inside if int(i) not in forbidden], dtype=np.intp)
        if eligible.size:
            eligible = eligible[np.linalg.norm(coords[eligible] - here, axis=1) <= gloc.r_n]
        occupancy.append(int(eligible.size))
        if not eligible.size:
            logger.debug(f"Square {square} of edge {edge} has no eligible point")
            raise ConstructionFailure(square, edge, "empty square")
        candidates = weights.from_vertex(current, eligible)
        best = int(np.argmax(candidates))
        hop_weights.append(float(candidates[best]))
        current = Vertex.relay(int(eligible[best]))
        here = coords[current.index]
        vertices.append(current)
    end = Vertex.backbone(b)
    hop_weights.append(weights.weight(current, end))
    vertices.append(end)
    return GreedyPathResult(RelayPath.through(gloc, vertices), np.array(hop_weights), tuple(occupancy))


@dataclass(frozen=True)
class WeightEstimate:
    """Constructed weight compared with the scale `e0 L_n log n`."""

    delta_n: float
    lower_achieved: float
    upper_cert: float
    eup_holds: bool
    max_weight: float = math.nan
    min_hop_weight: float = math.nan
    min_occupancy: int = 0

    @property
    def lower_ratio(self) -> float:
        """`lower_achieved / delta_n`."""
        return self.lower_achieved / self.delta_n

    @property
    def upper_ratio(self) -> float:
        """`upper_cert / delta_n`, equal to `M`."""
        return self.upper_cert / self.delta_n


class MaxWeightRelayRgg(NamedTuple):
    """Result of the greedy maximum-weight relay RGG construction."""

    relay_rgg: RelayRgg
    estimate: WeightEstimate
    greedy: dict[int, GreedyPathResult]


def check_eup(gloc: GLocGraph, weights: WeightAssignment, M: float, n: int) -> tuple[bool, float]:  # noqa: N803
    """Check that every edge of the combined graph weighs at most `M log n`.

    Parameters:
        gloc: The combined graph.
        weights: The weights.
        M: Threshold factor, above 2.
        n: Number of points, at least 2.

    Raises:
        ParameterError: When `M <= 2` or `n < 2`.

    Returns:
        Whether the event holds, and the largest realized weight.
    """
    if not M > 2:  # noqa: PLR2004
        raise ParameterError(f"M must be larger than 2, got {M!r}")
    if n < 2:  # noqa: PLR2004
        raise ParameterError(f"the threshold M log n needs n >= 2, got n={n!r}")
    backbone_pairs = gloc.backbone_edges.astype(np.uint64)
    backbone_weights = weights.of_ids(2 * backbone_pairs[:, 0] + np.uint64(1), 2 * backbone_pairs[:, 1])
    largest = float(backbone_weights.max(initial=0.0))
    for block in gloc.rgg.index.pair_blocks(gloc.rgg.r_n):
        relay_pairs = block.astype(np.uint64)
        largest = max(largest, float(weights.of_ids(2 * relay_pairs[:, 0], 2 * relay_pairs[:, 1]).max(initial=0.0)))
    return largest <= M * math.log(n), largest



def build_max_weight_relay_rgg(
    gloc: GLocGraph,
    weights: WeightAssignment,
    gamma_graph: DetGraph | None,
    L_n: int,  # noqa: N803
    M: float = DEFAULT_M,  # noqa: N803
) -> MaxWeightRelayRgg:
    """Route every backbone edge through its square chain greedily.

    Edges are processed by increasing index; points used by earlier paths are
    forbidden to later ones.

    Parameters:
        gloc: The combined graph.
        weights: The weights.
        gamma_graph: The backbone graph, by default the one of `gloc`.
        L_n: Hop budget of every path.
        M: Threshold factor of the weight certificate.

    Raises:
        ParameterError: When `L_n < l_up / r_n`.
        InvariantViolation: When a deterministic property of the construction fails.

    Returns:
        The relay RGG, its weight estimate and the per-edge greedy results.
    """
    gamma_graph = gamma_graph or gloc.gamma
    r_n = gloc.r_n
    if L_n * r_n < gamma_graph.l_up - HOP_SLACK:
        raise ParameterError(f"hop budget {L_n} is below l_up/r_n = {gamma_graph.l_up / r_n:.6g}")
    forbidden: set[int] = set()
    greedy: dict[int, GreedyPathResult] = {}
    for edge, (a, b) in enumerate(gamma_graph.edges):
        layout = square_chain_layout(gamma_graph.vertices[a], gamma_graph.vertices[b], r_n, L_n)
        result = build_greedy_max_weight_path(gloc, weights, layout, edge, forbidden)
        _check_greedy_path(result, edge, r_n, L_n)
        greedy[edge] = result
        forbidden.update(result.path.relay_indices)
    rr = RelayRgg({edge: result.path for edge, result in greedy.items()})
    report = validate_relay_rgg(rr, gamma_graph, r_n)
    if not report.ok:
        raise InvariantViolation("\n".join(report.violations))
    n = gloc.n
    eup_holds, largest = check_eup(gloc, weights, M, n)
    scale = gamma_graph.e0 * L_n * math.log(n)
    estimate = WeightEstimate(
        delta_n=scale,
        lower_achieved=sum(result.total for result in greedy.values()),
        upper_cert=M * scale,
        eup_holds=eup_holds,
        max_weight=largest,
        min_hop_weight=min(result.min_hop_weight for result in greedy.values()),
        min_occupancy=min((min(result.occupancy, default=0) for result in greedy.values()), default=0),
    )
    if eup_holds and estimate.lower_achieved > estimate.upper_cert:
        raise InvariantViolation(f"weight {estimate.lower_achieved:.6g} exceeds certificate {estimate.upper_cert:.6g}")
    logger.info(f"Built max-weight relay RGG of weight {estimate.lower_achieved:.6g}")
    return MaxWeightRelayRgg(rr, estimate, greedy)


def _check_greedy_path(result: GreedyPathResult, edge: int, r_n: float, L_n: int) -> None:  # noqa: N803
    hops = result.path.hops
    if not math.ceil(L_n / 16) <= hops <= L_n:
        raise InvariantViolation(f"edge {edge}: {hops} hops outside [{math.ceil(L_n / 16)}, {L_n}]")
    gap = float(pdist(result.path.coords).min())
    if gap < 0.3 * r_n - HOP_SLACK:
        raise InvariantViolation(f"edge {edge}: path vertices only {gap:.6g} apart")


class OracleResult(NamedTuple):
    """Exact maximum-weight relay path, or `NO_PATH`."""

    total: float | None
    vertices: tuple[Vertex, ...] = ()

    @property
    def found(self) -> bool:
        """Whether an admissible path exists."""
        return self.total is not NO_PATH


def oracle_max_weight_path(
    gloc: GLocGraph,
    weights: WeightAssignment,
    u: int,
    v: int,
    L_n: int,  # noqa: N803
) -> OracleResult:
    """Find the heaviest relay path from `u` to `v` with at most `L_n` edges by exhaustive search.

    Parameters:
        gloc: The combined graph.
        weights: The weights.
        u: Start backbone vertex.
        v: End backbone vertex.
        L_n: Hop budget.

    Raises:
        InstanceTooLargeError: When the graph has more than 12 relay points.

    Returns:
        The best total weight and path.
    """
    if gloc.n > ORACLE_LIMIT:
        raise InstanceTooLargeError(f"the oracle handles at most {ORACLE_LIMIT} relay points, got {gloc.n}")
    start, end = Vertex.backbone(u), Vertex.backbone(v)
    relays = np.arange(gloc.n)
    ids = 2 * relays.astype(np.uint64)
    between = weights.of_ids(np.repeat(ids, gloc.n), np.tile(ids, gloc.n)).reshape(gloc.n, gloc.n).tolist()
    leaving = weights.from_vertex(start, relays).tolist()
    arriving = weights.from_vertex(end, relays).tolist()
    neighbors = {i: [int(j) for j in gloc.rgg.neighbors(i)] for i in range(gloc.n)}
    finishing = {int(i) for i in gloc.relays_near(v)}
    best: list = [NO_PATH, ()]

    def explore(path: list[int], total: float) -> None:
        hops = len(path)
        last = path[-1]
        if last in finishing and hops + 1 <= L_n:
            candidate = total + arriving[last]
            if best[0] is NO_PATH or candidate > best[0]:
                best[0] = candidate
                best[1] = (start, *(Vertex.relay(i) for i in path), end)
        if hops + 2 > L_n:
            return
        for j in neighbors[last]:
            if j not in path:
                explore([*path, j], total + between[last][j])

    for first in gloc.relays_near(u):
        explore([int(first)], leaving[int(first)])
    return OracleResult(best[0], best[1])
