"""Geometry module.

Points of the unit square S = [-1/2, 1/2]^2, bounded densities on S,
i.i.d. sampling by rejection, and a uniform grid index answering
closed-ball radius queries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, NamedTuple

import numpy as np
from scipy.spatial.distance import cdist

from relay_rgg.errors import DensityError, GeometryError
from relay_rgg.logging import Logger

logger = Logger.get_logger(__name__)

HALF = 0.5
INTEGRAL_TOLERANCE = 1e-9
FILE_INTEGRAL_TOLERANCE = 1e-6
REJECTION_CAP_FACTOR = 10**6
SCAN_MARGIN = 1e-9
"""Absolute distance added to radius queries so that rounding in bucket keys never hides a point."""


class Point(NamedTuple):
    """A point of the closed unit square."""

    x: float
    y: float

    def inside(self, *, open_square: bool = False) -> bool:
        """Tell whether the point lies in the unit square.

        Parameters:
            open_square: Require the open square instead of the closed one.

        Returns:
            True if inside.
        """
        if open_square:
            return -HALF < self.x < HALF and -HALF < self.y < HALF
        return -HALF <= self.x <= HALF and -HALF <= self.y <= HALF

    def distance(self, other: Point) -> float:
        """Euclidean distance to another point.

        Parameters:
            other: The other point.

        Returns:
            The distance.
        """
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class DensitySpec:
    """A density on S bounded between `eps1` and `eps2`.

    A `grid` density is piecewise constant on an R x C partition of S:
    `cells[i, j]` is the value on the cell of row `i` (rows ordered by
    increasing y) and column `j` (increasing x).
    """

    kind: str = "uniform"
    cells: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if self.kind == "uniform":
            return
        if self.kind != "grid" or self.cells is None:
            raise DensityError(f"unknown density kind {self.kind!r}")
        cells = np.asarray(self.cells, dtype=float)
        if cells.ndim != 2 or cells.size == 0:  # noqa: PLR2004
            raise DensityError("grid density needs a non-empty 2-dimensional cell array")
        if not np.all(np.isfinite(cells)) or cells.min() <= 0:
            raise DensityError("grid density values must be finite and strictly positive")
        integral = float(cells.mean())
        if abs(integral - 1.0) > INTEGRAL_TOLERANCE:
            raise DensityError(f"density integrates to {integral!r}, not 1")
        object.__setattr__(self, "cells", cells)

    @classmethod
    def uniform(cls) -> DensitySpec:
        """Return the uniform density on S.

        Returns:
            The uniform density.
        """
        return cls("uniform")

    @classmethod
    def grid(cls, cells: np.ndarray | list[list[float]], *, normalize: bool = False) -> DensitySpec:
        """Return a piecewise-constant density.

        Parameters:
            cells: Cell values, rows by increasing y.
            normalize: Rescale the values so that they integrate to exactly 1.

        Returns:
            The density.
        """
        values = np.asarray(cells, dtype=float)
        if normalize and values.size:
            values = values / values.mean()
        return cls("grid", values)

    @classmethod
    def from_file(cls, path: str | Path) -> DensitySpec:
        """Read a density file.

        The first line is `grid R C`, followed by R*C values in row-major order.

        Parameters:
            path: Path to the file.

        Raises:
            DensityError: When the file is malformed or does not integrate to 1.

        Returns:
            The density.
        """
        tokens = Path(path).read_text().split()
        if len(tokens) < 3 or tokens[0] != "grid":  # noqa: PLR2004
            raise DensityError(f"{path}: expected a 'grid R C' header")
        try:
            rows, columns = int(tokens[1]), int(tokens[2])
            values = [float(token) for token in tokens[3:]]
        except ValueError as error:
            raise DensityError(f"{path}: {error}") from error
        if rows <= 0 or columns <= 0 or len(values) != rows * columns:
            raise DensityError(f"{path}: expected {rows}x{columns} values, got {len(values)}")
        cells = np.array(values).reshape(rows, columns)
        integral = float(cells.mean())
        if abs(integral - 1.0) > FILE_INTEGRAL_TOLERANCE:
            raise DensityError(f"{path}: density integrates to {integral!r}, not 1")
        logger.debug(f"Loaded {rows}x{columns} density from {path}")
        return cls.grid(cells, normalize=True)

    @property
    def eps1(self) -> float:
        """Lower bound of the density."""
        return 1.0 if self.cells is None else float(self.cells.min())

    @property
    def eps2(self) -> float:
        """Upper bound of the density."""
        return 1.0 if self.cells is None else float(self.cells.max())

    def evaluate(self, xy: np.ndarray) -> np.ndarray:
        """Evaluate the density at an (m, 2) array of points of S.

        Parameters:
            xy: The points.

        Returns:
            The m density values.
        """
        if self.cells is None:
            return np.ones(len(xy))
        rows, columns = self.cells.shape
        i = np.clip(np.floor((xy[:, 1] + HALF) * rows).astype(int), 0, rows - 1)
        j = np.clip(np.floor((xy[:, 0] + HALF) * columns).astype(int), 0, columns - 1)
        return self.cells[i, j]


@dataclass(frozen=True)
class PointSet:
    """An ordered set of points of S; row `i` of `coords` is point `i`."""

    coords: np.ndarray

    def __post_init__(self) -> None:
        coords = np.asarray(self.coords, dtype=float).reshape(-1, 2)
        if coords.size and np.abs(coords).max() > HALF:
            raise GeometryError("all points must lie in the closed unit square")
        coords.setflags(write=False)
        object.__setattr__(self, "coords", coords)

    @classmethod
    def of(cls, *points: tuple[float, float]) -> PointSet:
        """Build a point set from coordinate pairs.

        Parameters:
            *points: The points.

        Returns:
            The point set.
        """
        return cls(np.array(points, dtype=float).reshape(-1, 2))

    @property
    def n(self) -> int:
        """Number of points."""
        return len(self.coords)

    def __len__(self) -> int:
        return self.n

    def __iter__(self) -> Iterator[Point]:
        for x, y in self.coords:
            yield Point(float(x), float(y))

    def __getitem__(self, index: int) -> Point:
        x, y = self.coords[index]
        return Point(float(x), float(y))


def sample_points(n: int, density: DensitySpec, rng: np.random.Generator) -> PointSet:
    """Draw `n` i.i.d. points from `density` by rejection sampling.

    Proposals are uniform on S and accepted with probability f(x)/eps2.

    Parameters:
        n: Number of points.
        density: The density.
        rng: The random generator; the output only depends on its state.

    Raises:
        DensityError: When the proposal budget of 10^6 * n is exhausted.

    Returns:
        The sampled points.
    """
    if n < 0:
        raise GeometryError(f"cannot sample {n} points")
    accepted: list[np.ndarray] = []
    count = proposed = 0
    envelope = density.eps2
    cap = REJECTION_CAP_FACTOR * max(n, 1)
    while count < n:
        batch = max(64, math.ceil((n - count) * envelope * 1.1))
        proposals = rng.random((batch, 2)) - HALF
        keep = rng.random(batch) * envelope < density.evaluate(proposals)
        accepted.append(proposals[keep])
        count += int(keep.sum())
        proposed += batch
        if count < n and proposed > cap:
            raise DensityError(f"rejection sampling accepted {count}/{n} points after {proposed} proposals")
    coords = np.concatenate(accepted)[:n] if accepted else np.empty((0, 2))
    return PointSet(coords)


@dataclass(frozen=True)
class GridIndex:
    """Uniform bucket grid over S.

    Point `p` lives in bucket `(floor((p.x + 1/2) / cell_size), floor((p.y + 1/2) / cell_size))`.
    """

    points: PointSet
    cell_size: float
    buckets: dict[tuple[int, int], np.ndarray]

    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        """Return the bucket coordinates of a location.

        Parameters:
            x: Abscissa.
            y: Ordinate.

        Returns:
            The bucket key.
        """
        return math.floor((x + HALF) / self.cell_size), math.floor((y + HALF) / self.cell_size)

    def rings(self, radius: float) -> int:
        """Number of bucket rings to scan around a center for a given radius.

        Parameters:
            radius: Query radius.

        Returns:
            The ring count.
        """
        return max(1, math.ceil((radius + SCAN_MARGIN) / self.cell_size))

    def candidates(self, x: float, y: float, radius: float) -> np.ndarray:
        """Return indices of all points in buckets that may lie within `radius`.

        Parameters:
            x: Center abscissa.
            y: Center ordinate.
            radius: Query radius.

        Returns:
            Candidate indices (unsorted).
        """
        cx, cy = self.cell_of(x, y)
        k = self.rings(radius)
        found = [
            bucket
            for i in range(cx - k, cx + k + 1)
            for j in range(cy - k, cy + k + 1)
            if (bucket := self.buckets.get((i, j))) is not None
        ]
        return np.concatenate(found) if found else np.empty(0, dtype=np.intp)

    def pair_blocks(self, radius: float) -> Iterator[np.ndarray]:
        """Yield the index pairs `i < j` at distance at most `radius`, one pair of buckets at a time.

        Every pair is yielded exactly once, in no particular order.

        Parameters:
            radius: The threshold distance.

        Yields:
            (m, 2) arrays of pairs with the smaller index first.
        """
        k = self.rings(radius)
        offsets = [(di, dj) for di in range(0, k + 1) for dj in range(-k, k + 1) if di > 0 or dj >= 0]
        coords = self.points.coords
        threshold = radius * radius
        for (ci, cj), own in self.buckets.items():
            for di, dj in offsets:
                other = self.buckets.get((ci + di, cj + dj))
                if other is None:
                    continue
                sq = cdist(coords[own], coords[other], "sqeuclidean")
                rows, cols = np.nonzero(sq <= threshold)
                a, b = own[rows], other[cols]
                if di == 0 and dj == 0:
                    keep = a < b
                    a, b = a[keep], b[keep]
                yield np.column_stack((np.minimum(a, b), np.maximum(a, b)))

    def pairs_within(self, radius: float) -> np.ndarray:
        """Return all index pairs `i < j` at distance at most `radius`.

        Parameters:
            radius: The threshold distance.

        Returns:
            An (m, 2) array sorted lexicographically.
        """
        chunks = list(self.pair_blocks(radius))
        if not chunks:
            return np.empty((0, 2), dtype=np.intp)
        pairs = np.concatenate(chunks)
        return pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))]


def grid_build(points: PointSet, cell_size: float) -> GridIndex:
    """Bucket points into a uniform grid.

    Parameters:
        points: The points to index.
        cell_size: Side of a grid cell.

    Raises:
        GeometryError: When `cell_size` is not positive.

    Returns:
        The grid index.
    """
    if not cell_size > 0:
        raise GeometryError(f"cell size must be positive, got {cell_size!r}")
    buckets: dict[tuple[int, int], np.ndarray] = {}
    if points.n:
        keys = np.floor((points.coords + HALF) / cell_size).astype(np.int64)
        order = np.lexsort((keys[:, 1], keys[:, 0]))
        unique, starts = np.unique(keys[order], axis=0, return_index=True)
        for key, chunk in zip(unique, np.split(order, starts[1:])):
            buckets[(int(key[0]), int(key[1]))] = np.sort(chunk)
    return GridIndex(points, cell_size, buckets)


def neighbors_within(index: GridIndex, center: Point | tuple[float, float], radius: float) -> np.ndarray:
    """Return the indices of the points in the closed ball of `radius` around `center`.

    Parameters:
        index: The grid index.
        center: The ball center.
        radius: The ball radius.

    Returns:
        Sorted point indices.
    """
    x, y = center
    candidates = index.candidates(x, y, radius)
    if not candidates.size:
        return candidates
    delta = index.points.coords[candidates] - (x, y)
    inside = np.einsum("ij,ij->i", delta, delta) <= radius * radius
    return np.sort(candidates[inside])
