from __future__ import annotations

import numpy as np
import pytest

from trackfuse import FusionConfig, fuse
from trackfuse.data import GeneratorConfig, generate_tracks


def stadium_distance(points, straight=84.39, radius=36.5):
    """Exact distance from points to the stadium outline.

    The stadium is the set of points within ``radius`` of its core segment, so
    the distance to its boundary is ``|dist(p, core) - radius|``.
    """
    P = np.asarray(points, dtype=float)
    ex = np.maximum(np.abs(P[:, 0]) - straight / 2.0, 0.0)
    return np.abs(np.hypot(ex, P[:, 1]) - radius)


@pytest.fixture(scope="session")
def stadium_dataset():
    return generate_tracks(GeneratorConfig())


@pytest.fixture(scope="session")
def stadium_results(stadium_dataset):
    cfg = FusionConfig()
    return {algo: fuse(stadium_dataset.tracks, algo, cfg) for algo in ("MDA", "ARA", "DPA")}


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# (criterion number, passed, detail) rows filled in by test_acceptance.py
ACCEPTANCE: list = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, ok, detail in sorted(ACCEPTANCE, key=lambda r: r[0]):
        terminalreporter.write_line(f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
