"""MDA, block sweep (ARA), Douglas-Peucker (DPA) and the dispatcher."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trackfuse import FusionConfig, Polyline, fuse
from trackfuse.data import GeneratorConfig, Trajectory, generate_tracks
from trackfuse.errors import ConfigError, FusionError
from trackfuse.fusion import (
    ara_fuse,
    block_candidates,
    chain_order,
    default_endpoints,
    dp_indices,
    dp_seed_line,
    dp_simplify,
    mda_fuse,
    merge_close,
    order_for_dp,
    order_keys,
    split_by_gap,
)
from trackfuse.geometry import lateral_distances


def reference_dp(points, epsilon):
    """Textbook recursive Douglas-Peucker returning the kept indices."""
    pts = [tuple(map(float, p)) for p in points]

    def dist(p, a, b):
        x0, y0 = p
        x1, y1 = a
        x2, y2 = b
        if (x1, y1) == (x2, y2):
            return math.hypot(x0 - x1, y0 - y1)
        return abs((x2 - x1) * y0 - (y2 - y1) * x0 + x1 * y2 - y1 * x2) / math.hypot(x2 - x1, y2 - y1)

    def rec(i, j):
        if j - i < 2:
            return []
        best, where = -1.0, None
        for k in range(i + 1, j):
            d = dist(pts[k], pts[i], pts[j])
            if d > best:
                best, where = d, k
        if best > epsilon:
            return rec(i, where) + [where] + rec(where, j)
        return []

    return [0] + rec(0, len(pts) - 1) + [len(pts) - 1]


@pytest.fixture(scope="module")
def small_dataset():
    return generate_tracks(GeneratorConfig(num_tracks=4, points_per_track=80, seed=3))


class TestFusionConfig:
    def test_defaults(self):
        cfg = FusionConfig()
        assert cfg.gap == cfg.error_threshold
        assert FusionConfig(cluster_gap=0.25).gap == 0.25

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"error_threshold": 0},
            {"radius": -1},
            {"block_width": math.nan},
            {"dp_epsilon": math.inf},
            {"cluster_gap": 0},
            {"step": 4.0, "block_width": 3.0},
            {"max_vertices": 1},
            {"max_iterations": 0},
        ],
    )
    def test_invalid_rejected(self, kwargs):
        with pytest.raises(ConfigError):
            FusionConfig(**kwargs)


class TestMDA:
    def test_points_on_chord(self):
        P = np.column_stack([np.linspace(0, 10, 11), np.zeros(11)])
        res = mda_fuse(P, (0, 0), (10, 0), FusionConfig())
        assert len(res.polyline) == 2
        assert res.iterations == 0
        assert res.converged
        assert res.error_trace == (0.0,)

    def test_single_cluster_centroid(self, rng):
        cluster = np.array([5.0, 3.0]) + rng.uniform(-0.05, 0.05, size=(25, 2))
        res = mda_fuse(cluster, (0, 0), (10, 0), FusionConfig(error_threshold=0.5, radius=1.0))
        assert res.converged
        assert len(res.polyline) == 3
        expected = (sum(cluster[:, 0]) / 25, sum(cluster[:, 1]) / 25)
        np.testing.assert_allclose(res.polyline.vertices[1], expected, rtol=0, atol=1e-12)

    def test_endpoints_never_move(self, stadium_dataset, stadium_results):
        start, end = default_endpoints(stadium_dataset.tracks)
        V = stadium_results["MDA"].polyline.vertices
        assert V[0].tobytes() == start.tobytes()
        assert V[-1].tobytes() == end.tobytes()

    def test_trace_and_convergence(self, stadium_results):
        res = stadium_results["MDA"]
        assert res.converged
        assert res.error_trace[-1] <= 1.0
        assert all(d > 1.0 for d in res.error_trace[:-1])
        assert len(res.error_trace) == res.iterations + 1
        assert res.final_error == res.error_trace[-1]

    def test_vertex_cap(self, small_dataset):
        res = fuse(small_dataset.tracks, "MDA", FusionConfig(max_vertices=6))
        assert len(res.polyline) == 6
        assert not res.converged

    def test_iteration_cap(self, small_dataset):
        res = fuse(small_dataset.tracks, "MDA", FusionConfig(max_iterations=3))
        assert res.iterations == 3
        assert not res.converged

    def test_tiny_radius_uses_the_point_itself(self):
        P = np.array([[0.0, 0.0], [5.0, 4.0], [10.0, 0.0]])
        res = mda_fuse(P, (0, 0), (10, 0), FusionConfig(error_threshold=0.1, radius=1e-6))
        np.testing.assert_array_equal(res.polyline.vertices, P)

    def test_bad_inputs(self):
        P = np.array([[0.0, 0.0], [1.0, 1.0]])
        with pytest.raises(FusionError):
            mda_fuse(P, (0, 0), (0, 0), FusionConfig())
        with pytest.raises(FusionError):
            mda_fuse(P[:1], (0, 0), (1, 1), FusionConfig())

    def test_threshold_grid_is_monotone(self, small_dataset):
        grid = [0.9, 1.1, 1.3, 1.6, 2.0, 3.0]
        runs = [fuse(small_dataset.tracks, "MDA", FusionConfig(error_threshold=e)) for e in grid]
        counts = [len(r.polyline) for r in runs]
        errors = [r.final_error for r in runs]
        assert all(r.converged for r in runs)
        assert counts == sorted(counts, reverse=True)
        assert errors == sorted(errors)


class TestBlockSweep:
    def test_gap_split(self):
        groups = split_by_gap(np.array([0.0, 0.1, 5.0, 5.1]), 1.0)
        assert [g.tolist() for g in groups] == [[0, 1], [2, 3]]

    def test_window_centroids(self):
        P = np.array([[0.0, 0.0], [0.5, 0.1], [1.0, 5.0], [1.5, 5.1], [20.0, 0.0]])
        cands, _ = block_candidates(P, FusionConfig(block_width=2.0, step=2.0, cluster_gap=1.0))
        first = cands[:2]
        np.testing.assert_allclose(first[:, 1], [0.05, 5.05])
        np.testing.assert_allclose(first[:, 0], [0.25, 1.25])

    def test_horizontal_line(self):
        P = np.column_stack([np.linspace(0, 100, 201), np.full(201, 5.0)])
        cfg = FusionConfig(block_width=10, step=10)
        cands, windows = block_candidates(P, cfg)
        assert windows == 11
        assert np.all(cands[:, 1] == 5.0)
        res = ara_fuse(P, cfg)
        assert len(res.polyline) == 2
        assert lateral_distances(P, res.polyline).max() <= 1e-9

    @settings(max_examples=30, deadline=None)
    @given(
        angle=st.floats(-1.2, 1.2),
        w=st.floats(0.5, 20),
        ratio=st.floats(0.1, 1.0),
        n=st.integers(2, 300),
    )
    def test_colinear_recovery(self, angle, w, ratio, n):
        t = np.linspace(0.0, 120.0, n)
        P = np.column_stack([t * math.cos(angle), 7.0 + t * math.sin(angle)])
        cfg = FusionConfig(block_width=w, step=w * ratio)
        if P[:, 0].max() - P[:, 0].min() <= w:
            with pytest.raises(ConfigError):
                ara_fuse(P, cfg)
            return
        res = ara_fuse(P, cfg)
        assert lateral_distances(P, res.polyline).max() <= 1e-9

    def test_merge_close(self):
        c = np.array([[0.0, 0.0], [0.4, 0.0], [5.0, 0.0]])
        np.testing.assert_allclose(merge_close(c, 0.5), [[0.2, 0.0], [5.0, 0.0]])
        np.testing.assert_array_equal(merge_close(c, 0.3), c)

    def test_merge_is_not_transitive(self):
        c = np.column_stack([np.arange(6) * 0.4, np.zeros(6)])
        np.testing.assert_allclose(merge_close(c, 0.5), [[0.2, 0], [1.0, 0], [1.8, 0]])

    def test_chain_order_monotone_input(self, rng):
        x = np.sort(rng.uniform(0, 100, 40))
        c = np.column_stack([x, np.sin(x / 10)])
        shuffled = rng.permutation(40)
        order = chain_order(c[shuffled])
        np.testing.assert_array_equal(c[shuffled][order], c)

    def test_chain_order_follows_a_loop(self):
        theta = np.linspace(0.2, 2 * np.pi - 0.2, 60)
        c = np.column_stack([np.cos(theta), np.sin(theta)]) * 30
        order = chain_order(c)
        walked = c[order]
        steps = np.hypot(*np.diff(walked, axis=0).T)
        assert steps.max() < 3.5

    def test_extent_guard(self):
        P = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 0.0]])
        with pytest.raises(ConfigError):
            ara_fuse(P, FusionConfig(block_width=3.0, step=3.0))

    def test_window_too_coarse(self):
        # both window centroids end up within step/2 of each other and merge
        P = np.array([[0.0, 0.0]] + [[3.99, 0.0]] * 99 + [[4.0, 0.0]])
        with pytest.raises(ConfigError):
            ara_fuse(P, FusionConfig(block_width=4.0, step=4.0))


class TestDouglasPeucker:
    def test_collinear_three(self):
        assert dp_indices([(0, 0), (1, 1), (2, 2)], 1e-3).tolist() == [0, 2]

    def test_single_level(self):
        pts = [(0, 0), (5, 3), (10, 0)]
        assert dp_indices(pts, 1.0).tolist() == [0, 1, 2]
        assert dp_indices(pts, 4.0).tolist() == [0, 2]

    def test_reference_equivalence(self, rng):
        for _ in range(100):
            n = int(rng.integers(2, 51))
            pts = np.cumsum(rng.normal(size=(n, 2)), axis=0)
            eps = float(10 ** rng.uniform(-3, 1))
            assert dp_indices(pts, eps).tolist() == reference_dp(pts, eps)

    def test_closed_sub_range(self):
        pts = [(0, 0), (1, 2), (3, 0), (0, 0)]
        assert dp_indices(pts, 0.5).tolist() == reference_dp(pts, 0.5)

    @given(st.lists(st.tuples(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3)), min_size=2, max_size=40),
           st.floats(1e-6, 1e3))
    def test_subsequence_with_endpoints(self, pts, eps):
        idx = dp_indices(pts, eps)
        assert idx[0] == 0 and idx[-1] == len(pts) - 1
        assert np.all(np.diff(idx) > 0)

    def test_epsilon_extremes(self, rng):
        pts = np.cumsum(rng.normal(size=(30, 2)), axis=0)
        assert dp_indices(pts, 1e12).tolist() == [0, 29]
        assert len(dp_indices(pts, 1e-12)) == 30

    def test_simplify_returns_polyline(self):
        line = dp_simplify([(0, 0), (5, 3), (10, 0)], 4.0)
        assert line == Polyline([(0, 0), (10, 0)])

    def test_too_few_points(self):
        with pytest.raises(FusionError):
            dp_indices([(0, 0)], 1.0)


class TestOrdering:
    def test_identity_for_ordered_track(self):
        P = np.column_stack([np.linspace(0, 50, 20), np.sin(np.linspace(0, 3, 20))])
        out = order_for_dp([Trajectory("a", P)], Polyline([(0, 0), (50, 0)]))
        np.testing.assert_array_equal(out, P)

    def test_interleaved_laps_group_by_position(self):
        seed = Polyline([(0, 0), (100, 0)])
        lap1 = np.column_stack([np.arange(0, 100, 10.0), np.full(10, 0.5)])
        lap2 = np.column_stack([np.arange(5, 100, 10.0), np.full(10, -0.5)])
        out = order_for_dp([Trajectory("1", lap1), Trajectory("2", lap2)], seed)
        assert np.all(np.diff(out[:, 0]) > 0)

    def test_keys_non_decreasing(self, small_dataset):
        seed = dp_seed_line(small_dataset.tracks)
        out = order_for_dp(small_dataset.tracks, seed)
        keys = order_keys([Trajectory("all", out)], seed)
        assert np.all(np.diff(keys) >= 0)

    def test_loop_seed_is_a_track(self, small_dataset):
        seed = dp_seed_line(small_dataset.tracks)
        assert len(seed) > 2

    def test_open_path_seed_is_the_chord(self):
        t = [Trajectory("a", [(0, 0), (5, 1), (10, 0)]), Trajectory("b", [(0, 1), (10, 1)])]
        assert dp_seed_line(t) == Polyline([(0, 0.5), (10, 0.5)])


class TestFuse:
    def test_unknown_algorithm(self):
        with pytest.raises(ConfigError):
            fuse([(0, 0), (1, 1)], "XYZ")

    def test_mda_dispatch(self, small_dataset):
        cfg = FusionConfig()
        start, end = default_endpoints(small_dataset.tracks)
        direct = mda_fuse(small_dataset.points, start, end, cfg)
        via = fuse(small_dataset.tracks, "mda", cfg)
        assert via.polyline == direct.polyline
        assert via.error_trace == direct.error_trace

    @pytest.mark.parametrize("algo", ["MDA", "ARA", "DPA"])
    def test_deterministic(self, small_dataset, algo):
        a = fuse(small_dataset.tracks, algo)
        b = fuse(small_dataset.tracks, algo)
        assert a.polyline == b.polyline
        assert a.polyline.vertices.tobytes() == b.polyline.vertices.tobytes()

    @pytest.mark.parametrize("algo", ["MDA", "ARA", "DPA"])
    def test_result_invariants(self, stadium_results, algo):
        res = stadium_results[algo]
        assert res.algorithm == algo
        assert res.runtime_seconds > 0
        assert len(res.polyline) <= FusionConfig().max_vertices
        if res.converged:
            assert res.error_trace[-1] <= FusionConfig().error_threshold

    @pytest.mark.parametrize("algo", ["MDA", "ARA", "DPA"])
    def test_two_points(self, algo):
        res = fuse([Trajectory("a", [(0, 0), (10, 4)])], algo)
        assert res.polyline == Polyline([(0, 0), (10, 4)])

    def test_dpa_large_epsilon(self, small_dataset):
        res = fuse(small_dataset.tracks, "DPA", FusionConfig(dp_epsilon=1e9))
        assert len(res.polyline) == 2
