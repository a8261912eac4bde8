"""Configuration for the pytest test suite."""

from __future__ import annotations

import pytest

from relay_rgg.geometry import Point, PointSet
from relay_rgg.graphs import DetGraph, GLocGraph, build_gloc, build_rgg


@pytest.fixture()
def forced_chain() -> GLocGraph:
    """Return two backbone vertices 0.18 apart joined through a single relay point.

    Returns:
        The combined graph, with `r_n = 0.1`.
    """
    gamma = DetGraph((Point(0.0, 0.0), Point(0.18, 0.0)), ((0, 1),))
    return build_gloc(build_rgg(PointSet.of((0.09, 0.0)), 0.1), gamma)


@pytest.fixture(autouse=True)
def _single_thread(monkeypatch: pytest.MonkeyPatch) -> None:
    """Run experiments on one worker thread unless a test asks otherwise.

    Parameters:
        monkeypatch: Pytest fixture to patch the environment.
    """
    monkeypatch.setenv("RELAY_RGG_THREADS", "1")
