"""Value types for raw fixes, planar trajectories and synthetic datasets."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ..errors import ConfigError, GeometryError
from ..geometry import Polyline, as_points


@dataclass(frozen=True)
class RawFix:
    latitude: float
    longitude: float
    timestamp: Optional[float] = None
    track_id: str = "0"

    def __post_init__(self):
        if not (math.isfinite(self.latitude) and -90.0 <= self.latitude <= 90.0):
            raise GeometryError(f"latitude out of range: {self.latitude}")
        if not (math.isfinite(self.longitude) and -180.0 <= self.longitude <= 180.0):
            raise GeometryError(f"longitude out of range: {self.longitude}")


class Trajectory:
    """One recorded pass: ordered planar points plus optional timestamps (seconds)."""

    __slots__ = ("track_id", "points", "timestamps")

    def __init__(self, track_id, points: ArrayLike, timestamps: Optional[ArrayLike] = None):
        pts = as_points(points)
        if len(pts) < 2:
            raise GeometryError(f"track {track_id!r} needs at least 2 points, got {len(pts)}")
        pts.flags.writeable = False
        ts = None
        if timestamps is not None:
            ts = np.array(timestamps, dtype=np.float64)
            if ts.shape != (len(pts),):
                raise GeometryError(
                    f"track {track_id!r}: {len(ts)} timestamps for {len(pts)} points"
                )
            if not np.isfinite(ts).all() or (np.diff(ts) <= 0).any():
                raise GeometryError(f"track {track_id!r}: timestamps must be strictly increasing")
            ts.flags.writeable = False
        self.track_id = str(track_id)
        self.points = pts
        self.timestamps = ts

    def __len__(self) -> int:
        return len(self.points)

    def __repr__(self) -> str:
        return f"Trajectory({self.track_id!r}, {len(self)} points)"

    def __eq__(self, other) -> bool:
        if not isinstance(other, Trajectory):
            return NotImplemented
        same_ts = (self.timestamps is None and other.timestamps is None) or (
            self.timestamps is not None
            and other.timestamps is not None
            and np.array_equal(self.timestamps, other.timestamps)
        )
        return (
            self.track_id == other.track_id
            and np.array_equal(self.points, other.points)
            and same_ts
        )


@dataclass(frozen=True)
class StadiumShape:
    """Running-track outline: two straights of ``straight_length`` joined by semicircles."""

    # 400 m standard track measured on the inside lane
    straight_length: float = 84.39
    radius: float = 36.5

    def __post_init__(self):
        if not (self.straight_length > 0 and self.radius > 0):
            raise ConfigError("stadium straight_length and radius must be positive")


@dataclass(frozen=True)
class PolylineShape:
    vertices: tuple

    def __post_init__(self):
        Polyline(self.vertices)  # validates
        object.__setattr__(self, "vertices", tuple(tuple(map(float, v)) for v in self.vertices))


Shape = Union[StadiumShape, PolylineShape]


@dataclass(frozen=True)
class GeneratorConfig:
    shape: Shape = field(default_factory=StadiumShape)
    num_tracks: int = 10
    points_per_track: int = 160
    noise_sigma: float = 2.0
    seed: int = 42

    def __post_init__(self):
        if self.num_tracks < 1:
            raise ConfigError("num_tracks must be >= 1")
        if self.points_per_track < 2:
            raise ConfigError("points_per_track must be >= 2")
        if not (self.noise_sigma >= 0 and math.isfinite(self.noise_sigma)):
            raise ConfigError("noise_sigma must be a finite value >= 0")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must fit in an unsigned 64-bit integer")


@dataclass(frozen=True)
class SyntheticDataset:
    tracks: list
    ground_truth: Polyline
    generator_config: GeneratorConfig
    # noise-free position each fix was drawn around, per track
    true_positions: list = field(default=None, repr=False, compare=False)

    @property
    def points(self) -> NDArray[np.float64]:
        return stack_points(self.tracks)


def stack_points(tracks: Sequence[Trajectory]) -> NDArray[np.float64]:
    """All points of ``tracks`` concatenated in track order."""
    if not tracks:
        return np.empty((0, 2))
    return np.concatenate([t.points for t in tracks], axis=0)
