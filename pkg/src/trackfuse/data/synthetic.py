"""Seeded synthetic multi-lap GPS datasets with known ground truth."""

from __future__ import annotations

import math

import numpy as np
from numpy.typing import NDArray

from ..geometry import Polyline
from .model import GeneratorConfig, PolylineShape, StadiumShape, SyntheticDataset, Trajectory

# ground-truth vertex spacing along the stadium outline
_TRUTH_SPACING_M = 0.25
# seconds between consecutive fixes of a generated track
FIX_INTERVAL_S = 1.0


def stadium_outline(shape: StadiumShape, spacing: float = _TRUTH_SPACING_M) -> NDArray[np.float64]:
    """Closed, counter-clockwise stadium outline starting at the west end of the south straight.

    The first vertex is repeated at the end.
    """
    L, r = shape.straight_length, shape.radius
    half = L / 2.0
    n_straight = max(1, math.ceil(L / spacing))
    n_arc = max(4, math.ceil(math.pi * r / spacing))
    t = np.arange(n_straight) / n_straight
    a = np.arange(n_arc) / n_arc * math.pi
    south = np.column_stack([-half + t * L, np.full(n_straight, -r)])
    east = np.column_stack([half + r * np.sin(a), -r * np.cos(a)])
    north = np.column_stack([half - t * L, np.full(n_straight, r)])
    west = np.column_stack([-half - r * np.sin(a), r * np.cos(a)])
    ring = np.vstack([south, east, north, west])
    return np.vstack([ring, ring[:1]])


def ground_truth(config: GeneratorConfig) -> Polyline:
    shape = config.shape
    if isinstance(shape, StadiumShape):
        return Polyline(stadium_outline(shape))
    if isinstance(shape, PolylineShape):
        return Polyline(shape.vertices)
    raise TypeError(f"unsupported shape {shape!r}")


def is_closed(line: Polyline) -> bool:
    v = line.vertices
    return bool(np.array_equal(v[0], v[-1]))


def track_rng(seed: int, track_index: int) -> np.random.Generator:
    """Independent generator for one track, derived from ``(seed, track_index)``."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(track_index,)))


def generate_tracks(config: GeneratorConfig = GeneratorConfig()) -> SyntheticDataset:
    """Sample ``num_tracks`` noisy passes over the configured shape.

    Each track places ``points_per_track`` fixes at equal arc-length spacing
    (closed shapes get a random per-track phase inside the first spacing;
    open shapes include both ends) and adds isotropic Gaussian noise with
    per-axis standard deviation ``noise_sigma``.
    """
    truth = ground_truth(config)
    total = truth.length
    n = config.points_per_track
    closed = is_closed(truth)
    tracks = []
    true_positions = []
    for i in range(config.num_tracks):
        rng = track_rng(config.seed, i)
        if closed:
            phase = rng.uniform()
            s = (np.arange(n) + phase) * (total / n)
        else:
            s = np.linspace(0.0, total, n)
        exact = truth.interpolate(s)
        noise = rng.normal(0.0, config.noise_sigma, size=exact.shape)
        stamps = i * 3600.0 + np.arange(n) * FIX_INTERVAL_S
        tracks.append(Trajectory(f"track-{i:02d}", exact + noise, stamps))
        true_positions.append(exact)
    return SyntheticDataset(tracks, truth, config, true_positions)
