"""Relay module.

Circle-chain relay paths along backbone edges, the iterative construction
of vertex-disjoint relay RGGs, their validation, and the length estimate
that sandwiches the minimum number of edges of a relay RGG.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import pdist

from relay_rgg.enums import Mode
from relay_rgg.errors import ConstructionFailure, GeometryError, InvariantViolation, ParameterError
from relay_rgg.geometry import HALF, Point, neighbors_within
from relay_rgg.graphs import DetGraph, GLocGraph, Vertex, two_point_target
from relay_rgg.logging import Logger

logger = Logger.get_logger(__name__)

DISK_SCALE = 17
"""Disk radius is `delta * r_n / DISK_SCALE`; any value above 16 works."""

TWO_POINT_SLACK = 0.5
TOLERANCE = 1e-9
HOP_SLACK = 1e-12


@dataclass(frozen=True)
class CircleChainParams:
    """Parameters of one circle chain."""

    K: float  # noqa: N815
    gamma: float
    eta1: float
    eta2: float
    delta: float
    W: int  # noqa: N815
    L_const: int = DISK_SCALE  # noqa: N815

    @property
    def spacing(self) -> float:
        """Distance between consecutive disk centers, in units of `r_n`."""
        return 1 - self.delta

    @property
    def min_interior_gap(self) -> float:
        """Lower bound on the distance between two chosen vertices, in units of `r_n`."""
        return 1 - 1.5 * self.delta


def make_circle_chain_params(K: float, mode: Mode | str = Mode.TWO_POINT, eps: float | None = None) -> CircleChainParams:  # noqa: N803
    """Choose the chain length `W` and the shrink `delta` for an edge of `K` adjacency lengths.

    The slack is 1/2 in two-point mode and `K * eps` in ratio mode. `W` is the
    smallest integer with `delta = 1 - K / W` in `(eta1, eta2]`, that is the
    smallest integer strictly above `K + gamma`.

    Parameters:
        K: Edge length divided by the adjacency distance.
        mode: Two-point or ratio mode.
        eps: Ratio slack, required in ratio mode.

    Raises:
        ParameterError: When `K <= 1`, `eps` is missing or no integer fits the window.

    Returns:
        The parameters.
    """
    mode = Mode(mode)
    if not K > 1:
        raise ParameterError(f"a circle chain needs K > 1, got K={K!r}")
    if mode is Mode.RATIO:
        if eps is None or not eps > 0:
            raise ParameterError(f"ratio mode needs eps > 0, got {eps!r}")
        gamma = K * eps
    else:
        gamma = TWO_POINT_SLACK
    eta1 = gamma / (K + gamma)
    eta2 = (1 + gamma) / (1 + gamma + K)
    reach = K + gamma
    nearest = round(reach)
    W = nearest + 1 if math.isclose(reach, nearest, rel_tol=TOLERANCE) else math.floor(reach) + 1  # noqa: N806
    delta = 1 - K / W
    if not (eta1 < delta <= eta2 + TOLERANCE):
        raise ParameterError(f"no integer chain length fits K={K!r} with slack {gamma!r}")
    return CircleChainParams(K=K, gamma=gamma, eta1=eta1, eta2=eta2, delta=delta, W=W)


@dataclass(frozen=True)
class DiskChain:
    """The `W - 1` disks along an edge in which relay vertices are picked."""

    centers: np.ndarray
    radius: float
    direction: tuple[float, float]
    normal: tuple[float, float]

    def __len__(self) -> int:
        return len(self.centers)


def disk_chain(u: Point, v: Point, params: CircleChainParams, r_n: float) -> DiskChain:
    """Place the disks of a circle chain along the segment `u -> v`.

    Disk `i` (1-based) is centred at distance `i * r_n * (1 - delta)` from `u`
    along the segment, shifted by its radius `delta * r_n / 17` along the
    normal pointing toward the center of the square (the left normal when the
    segment line goes through the center).

    Parameters:
        u: Start of the edge.
        v: End of the edge.
        params: Chain parameters.
        r_n: Adjacency distance.

    Raises:
        GeometryError: When a disk is not inside the closed unit square.

    Returns:
        The disks.
    """
    start, end = np.array(u, dtype=float), np.array(v, dtype=float)
    direction = (end - start) / np.linalg.norm(end - start)
    normal = np.array([-direction[1], direction[0]])
    inward = float(np.dot(-(start + end) / 2, normal))
    if inward < -HOP_SLACK:
        normal = -normal
    radius = params.delta * r_n / params.L_const
    steps = np.arange(1, params.W)[:, None] * r_n * params.spacing
    centers = start + steps * direction + radius * normal
    if centers.size and (np.abs(centers).max() + radius > HALF):
        raise GeometryError(f"a disk of the chain {tuple(u)} -> {tuple(v)} leaves the unit square")
    return DiskChain(centers, radius, (float(direction[0]), float(direction[1])), (float(normal[0]), float(normal[1])))


@dataclass(frozen=True)
class RelayPath:
    """A path between two backbone vertices whose interior vertices are relay points."""

    vertices: tuple[Vertex, ...]
    coords: np.ndarray = field(compare=False, repr=False)

    @property
    def hops(self) -> int:
        """Number of edges."""
        return len(self.vertices) - 1

    @property
    def relay_indices(self) -> list[int]:
        """Indices of the interior relay points."""
        return [vertex.index for vertex in self.vertices[1:-1]]

    def hop_lengths(self) -> np.ndarray:
        """Return the Euclidean length of every hop.

        Returns:
            The lengths.
        """
        return np.linalg.norm(np.diff(self.coords, axis=0), axis=1)

    @classmethod
    def through(cls, gloc: GLocGraph, vertices: list[Vertex]) -> RelayPath:
        """Build a path from its vertices, looking up their locations.

        Parameters:
            gloc: The combined graph.
            vertices: Path vertices in order.

        Returns:
            The path.
        """
        return cls(tuple(vertices), np.array([gloc.location(vertex) for vertex in vertices], dtype=float))


def build_relay_path(
    gloc: GLocGraph,
    edge: int,
    params: CircleChainParams,
    forbidden: set[int] | None = None,
) -> RelayPath:
    """Pick one relay point per disk of the chain along a backbone edge.

    In each disk the lowest-indexed point not in `forbidden` is chosen.

    Parameters:
        gloc: The combined graph.
        edge: Backbone edge index.
        params: Chain parameters for this edge.
        forbidden: Relay indices that may not be used.

    Raises:
        ConstructionFailure: When a disk holds no eligible point.

    Returns:
        The relay path, with `W` hops.
    """
    forbidden = forbidden or set()
    a, b = gloc.gamma.edges[edge]
    chain = disk_chain(gloc.gamma.vertices[a], gloc.gamma.vertices[b], params, gloc.r_n)
    chosen = []
    for slot, center in enumerate(chain.centers):
        inside = neighbors_within(gloc.rgg.index, center, chain.radius)
        eligible = [int(i) for i in inside if int(i) not in forbidden]
        if not eligible:
            logger.debug(f"Disk {slot} of edge {edge} has no eligible point")
            raise ConstructionFailure(slot, edge, "empty disk")
        chosen.append(eligible[0])
    vertices = [Vertex.backbone(a), *(Vertex.relay(i) for i in chosen), Vertex.backbone(b)]
    return RelayPath.through(gloc, vertices)


@dataclass
class ValidationReport:
    """Violations of the relay RGG conditions."""

    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        """Whether no violation was found."""
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


@dataclass(frozen=True)
class RelayRgg:
    """One relay path per backbone edge, keyed by edge index."""

    paths: dict[int, RelayPath]
    params: dict[int, CircleChainParams] = field(default_factory=dict, compare=False)

    @property
    def total_edges(self) -> int:
        """Sum of the hop counts of all paths."""
        return sum(path.hops for path in self.paths.values())


def validate_relay_rgg(rr: RelayRgg, gamma_graph: DetGraph, r_n: float) -> ValidationReport:
    """Check the relay RGG conditions.

    Every backbone edge needs a path with the same endvertices and hops no
    longer than `r_n`; paths of edges without a common endvertex share no
    vertex, and paths of edges with a common endvertex share only that one.

    Parameters:
        rr: The relay RGG.
        gamma_graph: The backbone graph.
        r_n: Adjacency distance.

    Returns:
        The report.
    """
    report = ValidationReport()
    for edge, (a, b) in enumerate(gamma_graph.edges):
        path = rr.paths.get(edge)
        if path is None:
            report.violations.append(f"edge {edge}: no relay path")
            continue
        if path.vertices[0] != Vertex.backbone(a) or path.vertices[-1] != Vertex.backbone(b):
            report.violations.append(f"edge {edge}: path endvertices do not match the edge")
        if any(vertex.is_backbone for vertex in path.vertices[1:-1]):
            report.violations.append(f"edge {edge}: a backbone vertex is inside the path")
        if len(set(path.vertices)) != len(path.vertices):
            report.violations.append(f"edge {edge}: path repeats a vertex")
        for hop, length in enumerate(path.hop_lengths()):
            if length > r_n + HOP_SLACK:
                report.violations.append(f"edge {edge}: hop {hop} has length {length:.6g} > r_n={r_n:.6g}")
    edges = sorted(rr.paths)
    for position, first in enumerate(edges):
        for second in edges[position + 1 :]:
            common = set(rr.paths[first].vertices) & set(rr.paths[second].vertices)
            if first >= gamma_graph.e0 or second >= gamma_graph.e0:
                continue
            shared = gamma_graph.shared_endvertex(first, second)
            allowed = set() if shared is None else {Vertex.backbone(shared)}
            if common != allowed:
                extra = ", ".join(str(vertex) for vertex in sorted(common - allowed))
                missing = "" if common >= allowed else f"missing shared endvertex {shared}"
                report.violations.append(f"edges {first} and {second}: not disjoint ({extra or missing})")
    return report


def build_relay_rgg(
    gloc: GLocGraph,
    gamma_graph: DetGraph | None = None,
    mode: Mode | str = Mode.TWO_POINT,
    eps: float | None = None,
) -> RelayRgg:
    """Route every backbone edge through its own circle chain.

    Edges are processed by increasing index; points used by earlier paths are
    forbidden to later ones.

    Parameters:
        gloc: The combined graph.
        gamma_graph: The backbone graph, by default the one of `gloc`.
        mode: Two-point or ratio mode.
        eps: Ratio slack, required in ratio mode.

    Raises:
        ConstructionFailure: When a disk is empty (carries edge and disk index).
        InvariantViolation: When a deterministic property of the construction fails.

    Returns:
        The relay RGG.
    """
    gamma_graph = gamma_graph or gloc.gamma
    mode = Mode(mode)
    r_n = gloc.r_n
    forbidden: set[int] = set()
    spacing_floor = math.inf
    paths: dict[int, RelayPath] = {}
    all_params: dict[int, CircleChainParams] = {}
    for edge, (a, b) in enumerate(gamma_graph.edges):
        params = make_circle_chain_params(gamma_graph.length(edge) / r_n, mode, eps)
        chain = disk_chain(gamma_graph.vertices[a], gamma_graph.vertices[b], params, r_n)
        if 2 * chain.radius < spacing_floor * r_n:
            for slot, center in enumerate(chain.centers):
                taken = sum(int(i) in forbidden for i in neighbors_within(gloc.rgg.index, center, chain.radius))
                if taken > 1:
                    raise InvariantViolation(f"edge {edge}: disk {slot} holds {taken} points of earlier paths")
        path = build_relay_path(gloc, edge, params, forbidden)
        _check_path(path, params, edge, r_n, mode)
        paths[edge] = path
        all_params[edge] = params
        forbidden.update(path.relay_indices)
        spacing_floor = min(spacing_floor, params.min_interior_gap)
    rr = RelayRgg(paths, all_params)
    report = validate_relay_rgg(rr, gamma_graph, r_n)
    if not report.ok:
        raise InvariantViolation("\n".join(report.violations))
    if rr.total_edges * r_n < gamma_graph.l_tot - TOLERANCE:
        raise InvariantViolation(f"{rr.total_edges} edges of length {r_n} cannot cover {gamma_graph.l_tot}")
    logger.info(f"Built relay RGG with {rr.total_edges} edges over {gamma_graph.e0} backbone edges")
    return rr


def _check_path(path: RelayPath, params: CircleChainParams, edge: int, r_n: float, mode: Mode) -> None:
    if path.hops != params.W:
        raise InvariantViolation(f"edge {edge}: path has {path.hops} hops instead of {params.W}")
    if mode is Mode.TWO_POINT and path.hops not in _two_point_hops(params.K):
        raise InvariantViolation(f"edge {edge}: {path.hops} hops outside {_two_point_hops(params.K)}")
    interior = path.coords[1:-1]
    if len(interior) > 1:
        gap = float(pdist(interior).min())
        if gap < r_n * params.min_interior_gap - HOP_SLACK:
            raise InvariantViolation(f"edge {edge}: interior vertices only {gap:.6g} apart")


def _two_point_hops(K: float) -> set[int]:  # noqa: N803
    target = two_point_target(K, 1.0)
    return {target, target + 1}


@dataclass(frozen=True)
class LengthEstimate:
    """Bounds on the minimum number of edges of a relay RGG."""

    lower: float
    achieved: float
    per_edge_targets: tuple[int, ...]
    e0: int
    mode: Mode = Mode.TWO_POINT
    eps: float | None = None

    @property
    def success(self) -> bool:
        """Whether a relay RGG was constructed."""
        return math.isfinite(self.achieved)

    @property
    def additive_holds(self) -> bool:
        """Whether `achieved <= lower + 2 e0`."""
        return self.success and self.achieved <= self.lower + 2 * self.e0 + TOLERANCE

    @property
    def ratio_holds(self) -> bool:
        """Whether `achieved <= lower (1 + eps)`, false without `eps`."""
        return self.success and self.eps is not None and self.achieved <= self.lower * (1 + self.eps) + TOLERANCE

    @property
    def chain_bound_holds(self) -> bool:
        """Whether `achieved <= lower (1 + eps) + e0`, the bound every ratio-mode chain meets."""
        return self.success and self.eps is not None and self.achieved <= self.lower * (1 + self.eps) + self.e0 + TOLERANCE

    @property
    def sandwich_holds(self) -> bool:
        """The sandwich flag of the configured mode."""
        return self.additive_holds if self.mode is Mode.TWO_POINT else self.ratio_holds


def length_bounds(
    rr: RelayRgg | None,
    gamma_graph: DetGraph,
    r_n: float,
    mode: Mode | str = Mode.TWO_POINT,
    eps: float | None = None,
) -> LengthEstimate:
    """Compare a constructed relay RGG with the lower bound `l_tot / r_n`.

    Parameters:
        rr: The relay RGG, or None if the construction failed.
        gamma_graph: The backbone graph.
        r_n: Adjacency distance.
        mode: Two-point or ratio mode.
        eps: Ratio slack.

    Returns:
        The estimate; `achieved` is infinite on failure.
    """
    targets = tuple(two_point_target(length, r_n) for length in gamma_graph.lengths)
    achieved = math.inf if rr is None else float(rr.total_edges)
    return LengthEstimate(
        lower=gamma_graph.l_tot / r_n,
        achieved=achieved,
        per_edge_targets=targets,
        e0=gamma_graph.e0,
        mode=Mode(mode),
        eps=eps,
    )
