"""Tests for the `geometry` module."""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.distance import cdist

from relay_rgg.errors import DensityError, GeometryError
from relay_rgg.geometry import DensitySpec, Point, PointSet, grid_build, neighbors_within, sample_points
from tests import FIXTURES_DIR

coordinate = st.floats(min_value=-0.5, max_value=0.5, allow_nan=False)


def brute_force_ball(points: PointSet, center: tuple[float, float], radius: float) -> np.ndarray:
    """Scan every point.

    Parameters:
        points: The points.
        center: Ball center.
        radius: Ball radius.

    Returns:
        Sorted indices of the points in the closed ball.
    """
    delta = points.coords - center
    return np.nonzero(np.einsum("ij,ij->i", delta, delta) <= radius * radius)[0]


def brute_force_pairs(points: PointSet, radius: float) -> set[tuple[int, int]]:
    """Scan every pair.

    Parameters:
        points: The points.
        radius: Threshold distance.

    Returns:
        Pairs `i < j` at distance at most `radius`.
    """
    if not points.n:
        return set()
    close = cdist(points.coords, points.coords, "sqeuclidean") <= radius * radius
    return {(int(i), int(j)) for i, j in zip(*np.nonzero(np.triu(close, k=1)))}


def test_point_inside() -> None:
    """Tell closed and open square membership apart."""
    assert Point(0.5, 0.0).inside()
    assert not Point(0.5, 0.0).inside(open_square=True)
    assert Point(0.49, -0.49).inside(open_square=True)
    assert not Point(0.51, 0.0).inside()
    assert Point(0.0, 0.0).distance(Point(0.3, 0.4)) == pytest.approx(0.5)


def test_point_set_rejects_points_outside_square() -> None:
    """Refuse points outside the closed unit square."""
    with pytest.raises(GeometryError):
        PointSet.of((0.0, 0.0), (0.6, 0.0))


def test_sample_zero_points() -> None:
    """Sample an empty set."""
    points = sample_points(0, DensitySpec.uniform(), np.random.default_rng(1))
    assert points.n == 0
    assert points.coords.shape == (0, 2)


def test_sample_points_inside_square() -> None:
    """All sampled points lie in the unit square."""
    points = sample_points(1000, DensitySpec.uniform(), np.random.default_rng(42))
    assert points.n == 1000
    assert all(point.inside() for point in points)


def test_sample_points_is_reproducible() -> None:
    """Two generators in the same state give the same points."""
    first = sample_points(300, DensitySpec.uniform(), np.random.default_rng(5))
    second = sample_points(300, DensitySpec.uniform(), np.random.default_rng(5))
    assert np.array_equal(first.coords, second.coords)


def test_uniform_sample_quadrant_count() -> None:
    """The upper right quadrant receives a quarter of the points."""
    n = 100_000
    points = sample_points(n, DensitySpec.uniform(), np.random.default_rng(7))
    count = int(((points.coords[:, 0] >= 0) & (points.coords[:, 1] >= 0)).sum())
    assert abs(count - n / 4) <= 3 * math.sqrt(n * 0.25 * 0.75)


def test_density_file() -> None:
    """Read a piecewise-constant density and its bounds."""
    density = DensitySpec.from_file(FIXTURES_DIR / "density.txt")
    assert density.eps1 == pytest.approx(0.5)
    assert density.eps2 == pytest.approx(1.5)
    values = density.evaluate(np.array([[-0.25, -0.25], [0.25, -0.25], [0.25, 0.25]]))
    assert values.tolist() == pytest.approx([0.5, 1.5, 1.0])


def test_grid_density_sampling_follows_cells() -> None:
    """The densest cell receives its share of the points."""
    density = DensitySpec.from_file(FIXTURES_DIR / "density.txt")
    points = sample_points(40_000, density, np.random.default_rng(3))
    share = float(((points.coords[:, 0] >= 0) & (points.coords[:, 1] < 0)).mean())
    assert share == pytest.approx(1.5 / 4, abs=0.01)


def test_density_must_integrate_to_one(tmp_path: Path) -> None:
    """Reject a density file whose mean is not 1.

    Parameters:
        tmp_path: Pytest fixture providing a temporary directory.
    """
    path = tmp_path / "bad.txt"
    path.write_text("grid 1 2\n1.0 2.0\n")
    with pytest.raises(DensityError, match="integrates"):
        DensitySpec.from_file(path)


@pytest.mark.parametrize("cells", [[[1.0, 0.0]], [[1.0, float("inf")]], []])
def test_density_rejects_unbounded_or_vanishing_cells(cells: list) -> None:
    """Reject cells that are zero, infinite or missing.

    Parameters:
        cells: Cell values.
    """
    with pytest.raises(DensityError):
        DensitySpec.grid(cells)


def test_grid_build_empty() -> None:
    """Index an empty point set."""
    assert grid_build(PointSet.of(), 0.1).buckets == {}


def test_grid_build_bucket_of_origin() -> None:
    """Bucket the origin with the key formula."""
    index = grid_build(PointSet.of((0.0, 0.0)), 0.1)
    assert list(index.buckets) == [(5, 5)]
    assert index.buckets[(5, 5)].tolist() == [0]


def test_grid_build_rejects_non_positive_cell_size() -> None:
    """Refuse a zero cell size."""
    with pytest.raises(GeometryError):
        grid_build(PointSet.of((0.0, 0.0)), 0.0)


@pytest.mark.parametrize(("center", "expected"), [((0.05, 0.0), [0]), ((0.2, 0.0), [])])
def test_neighbors_within_single_point(center: tuple[float, float], expected: list[int]) -> None:
    """Query around a single point.

    Parameters:
        center: Ball center.
        expected: Expected indices.
    """
    index = grid_build(PointSet.of((0.0, 0.0)), 0.1)
    assert neighbors_within(index, center, 0.1).tolist() == expected


def test_neighbors_within_radius_larger_than_cells() -> None:
    """Scan several rings of buckets when the radius exceeds the cell size."""
    points = PointSet.of((0.0, 0.0), (0.3, 0.0), (0.31, 0.0))
    index = grid_build(points, 0.05)
    assert neighbors_within(index, (0.0, 0.0), 0.305).tolist() == [0, 1]


@pytest.mark.parametrize("seed", range(100))
def test_neighbors_within_matches_brute_force(seed: int) -> None:
    """Answer radius queries on random sets exactly like a full scan.

    Parameters:
        seed: Random seed.
    """
    rng = np.random.default_rng(seed)
    points = sample_points(500, DensitySpec.uniform(), rng)
    radius = float(rng.uniform(0.01, 0.2))
    index = grid_build(points, radius)
    for center in rng.uniform(-0.5, 0.5, (10, 2)):
        expected = brute_force_ball(points, tuple(center), radius)
        assert np.array_equal(neighbors_within(index, tuple(center), radius), expected)


def test_pairs_within_matches_brute_force() -> None:
    """Find all close pairs of 2000 random points."""
    points = sample_points(2000, DensitySpec.uniform(), np.random.default_rng(11))
    index = grid_build(points, 0.03)
    pairs = index.pairs_within(0.03)
    assert {(int(i), int(j)) for i, j in pairs} == brute_force_pairs(points, 0.03)
    assert len(pairs) == len(brute_force_pairs(points, 0.03))


@settings(max_examples=100, deadline=None)
@given(
    points=st.lists(st.tuples(coordinate, coordinate), max_size=60),
    center=st.tuples(coordinate, coordinate),
    radius=st.floats(min_value=0.0, max_value=0.8),
    cell_size=st.floats(min_value=0.01, max_value=1.0),
)
def test_neighbors_within_property(
    points: list[tuple[float, float]],
    center: tuple[float, float],
    radius: float,
    cell_size: float,
) -> None:
    """Any point set, radius and cell size give the brute-force answer.

    Parameters:
        points: Point coordinates.
        center: Ball center.
        radius: Ball radius.
        cell_size: Grid cell side.
    """
    point_set = PointSet.of(*points)
    index = grid_build(point_set, cell_size)
    assert np.array_equal(neighbors_within(index, center, radius), brute_force_ball(point_set, center, radius))


@settings(max_examples=50, deadline=None)
@given(
    points=st.lists(st.tuples(coordinate, coordinate), max_size=40),
    radius=st.floats(min_value=0.0, max_value=0.5),
    cell_size=st.floats(min_value=0.02, max_value=1.0),
)
def test_pairs_within_property(points: list[tuple[float, float]], radius: float, cell_size: float) -> None:
    """Any point set gives the brute-force pair set, without duplicates.

    Parameters:
        points: Point coordinates.
        radius: Threshold distance.
        cell_size: Grid cell side.
    """
    point_set = PointSet.of(*points)
    pairs = grid_build(point_set, cell_size).pairs_within(radius)
    found = [(int(i), int(j)) for i, j in pairs]
    assert len(found) == len(set(found))
    assert set(found) == brute_force_pairs(point_set, radius)
