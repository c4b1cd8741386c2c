"""Planar geometry: point/line distances, clamped projections, nearest-segment partitions.

Everything works in a local rectangular frame measured in meters. Bulk
operations take ``(N, 2)`` float arrays; the scalar helpers accept anything
that unpacks into ``(x, y)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import DegenerateSegmentError, GeometryError

# rows * segments handled per block by the vectorised kernels
_BLOCK_CELLS = 1 << 21


class PlanarPoint(NamedTuple):
    x: float
    y: float


class Segment(NamedTuple):
    a: PlanarPoint
    b: PlanarPoint


class Projection(NamedTuple):
    distance: float
    param: float
    segment_index: int


def as_points(points: ArrayLike) -> NDArray[np.float64]:
    """Coerce ``points`` into a fresh ``(N, 2)`` float64 array of finite values."""
    arr = np.array(points, dtype=np.float64)
    if arr.ndim == 1 and arr.size == 2:
        arr = arr.reshape(1, 2)
    if arr.size == 0:
        return arr.reshape(0, 2)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise GeometryError(f"expected an (N, 2) array of points, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        bad = int(np.flatnonzero(~np.isfinite(arr).all(axis=1))[0])
        raise GeometryError(f"point #{bad} has a non-finite coordinate: {arr[bad].tolist()}")
    return arr


def _as_xy(p) -> tuple[float, float]:
    x, y = float(p[0]), float(p[1])
    if not (math.isfinite(x) and math.isfinite(y)):
        raise GeometryError(f"non-finite point ({x}, {y})")
    return x, y


def _segment_xy(seg) -> tuple[float, float, float, float]:
    a, b = seg
    ax, ay = _as_xy(a)
    bx, by = _as_xy(b)
    if ax == bx and ay == by:
        raise DegenerateSegmentError(f"segment endpoints coincide at ({ax}, {ay})")
    return ax, ay, bx, by


def line_distance(p, seg) -> float:
    """Perpendicular distance from ``p`` to the infinite line through ``seg``.

    Evaluated in the cross-product form
    ``|dx*y_p - dy*x_p + x_a*y_b - y_a*x_b| / hypot(dx, dy)``.
    """
    ax, ay, bx, by = _segment_xy(seg)
    px, py = _as_xy(p)
    dx = bx - ax
    dy = by - ay
    return abs(dx * py - dy * px + ax * by - ay * bx) / math.hypot(dx, dy)


def line_distances(points: NDArray[np.float64], a, b) -> NDArray[np.float64]:
    """Vectorised :func:`line_distance` of many points to one line.

    Uses the same operation order as the scalar version so both agree bit for bit.
    """
    ax, ay, bx, by = _segment_xy((a, b))
    dx = bx - ax
    dy = by - ay
    norm = math.hypot(dx, dy)
    return np.abs(dx * points[:, 1] - dy * points[:, 0] + ax * by - ay * bx) / norm


def _clamped(px, py, ax, ay, dx, dy, dd):
    # broadcasting kernel shared by the scalar and bulk paths
    num = (px - ax) * dx + (py - ay) * dy
    # dd underflows to 0 for segments shorter than ~1e-154 m; treat as a point
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(dd > 0, num / dd, 0.0)
    t = np.clip(t, 0.0, 1.0)
    cx = ax + t * dx
    cy = ay + t * dy
    return np.hypot(px - cx, py - cy), t


def segment_distance(p, seg) -> Projection:
    """Distance from ``p`` to the closed segment ``seg`` (projection clamped to the ends).

    ``segment_index`` is always 0; the field exists so polyline queries can
    reuse the same record.
    """
    ax, ay, bx, by = _segment_xy(seg)
    px, py = _as_xy(p)
    dx = bx - ax
    dy = by - ay
    d, t = _clamped(
        np.float64(px), np.float64(py), np.float64(ax), np.float64(ay),
        np.float64(dx), np.float64(dy), np.float64(dx * dx + dy * dy),
    )
    return Projection(float(d), float(t), 0)


class Polyline:
    """Immutable ordered chain of at least two vertices with no repeated neighbours."""

    __slots__ = ("_v",)

    def __init__(self, vertices: ArrayLike):
        v = as_points(vertices)
        if len(v) < 2:
            raise GeometryError(f"a polyline needs at least 2 vertices, got {len(v)}")
        same = (v[1:] == v[:-1]).all(axis=1)
        if same.any():
            k = int(np.flatnonzero(same)[0])
            raise GeometryError(f"vertices {k} and {k + 1} coincide at {v[k].tolist()}")
        v.flags.writeable = False
        self._v = v

    @classmethod
    def from_points(cls, points: ArrayLike) -> "Polyline":
        """Build a polyline after dropping consecutive duplicate points."""
        v = as_points(points)
        if len(v) > 1:
            keep = np.ones(len(v), dtype=bool)
            keep[1:] = (v[1:] != v[:-1]).any(axis=1)
            v = v[keep]
        return cls(v)

    @property
    def vertices(self) -> NDArray[np.float64]:
        return self._v

    def __len__(self) -> int:
        return len(self._v)

    def __iter__(self) -> Iterator[PlanarPoint]:
        for x, y in self._v:
            yield PlanarPoint(float(x), float(y))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Polyline):
            return NotImplemented
        return self._v.shape == other._v.shape and bool(np.array_equal(self._v, other._v))

    def __hash__(self) -> int:
        return hash(self._v.tobytes())

    def __repr__(self) -> str:
        return f"Polyline({len(self)} vertices, length={self.length:.3f} m)"

    @property
    def n_segments(self) -> int:
        return len(self._v) - 1

    def segment(self, k: int) -> Segment:
        if not 0 <= k < self.n_segments:
            raise IndexError(f"segment index {k} out of range for {self.n_segments} segments")
        a, b = self._v[k], self._v[k + 1]
        return Segment(PlanarPoint(float(a[0]), float(a[1])), PlanarPoint(float(b[0]), float(b[1])))

    @property
    def segment_lengths(self) -> NDArray[np.float64]:
        d = np.diff(self._v, axis=0)
        return np.hypot(d[:, 0], d[:, 1])

    @property
    def cumulative_length(self) -> NDArray[np.float64]:
        """Arc length at each vertex, starting from 0."""
        return np.concatenate([[0.0], np.cumsum(self.segment_lengths)])

    @property
    def length(self) -> float:
        return float(self.segment_lengths.sum())

    def arc_position(self, segment_index, param) -> NDArray[np.float64]:
        """Arc length of the location ``param`` along segment ``segment_index``."""
        seg = np.asarray(segment_index)
        return self.cumulative_length[seg] + np.asarray(param) * self.segment_lengths[seg]

    def interpolate(self, s: ArrayLike) -> NDArray[np.float64]:
        """Points at arc lengths ``s`` (clamped to ``[0, length]``)."""
        cum = self.cumulative_length
        s = np.clip(np.asarray(s, dtype=np.float64), 0.0, cum[-1])
        return np.column_stack([np.interp(s, cum, self._v[:, 0]), np.interp(s, cum, self._v[:, 1])])

    def sample(self, n: int) -> NDArray[np.float64]:
        """``n`` points spaced uniformly in arc length, both ends included."""
        if n < 2:
            raise ValueError("need at least 2 samples")
        return self.interpolate(np.linspace(0.0, self.length, n))


@dataclass(frozen=True)
class Partition:
    """Nearest-segment assignment of data points to a polyline.

    ``assignment[j]`` is the segment owning point ``j``; ``distance`` and
    ``param`` hold the clamped distance and projection parameter on that
    segment.
    """

    assignment: NDArray[np.intp]
    distance: NDArray[np.float64]
    param: NDArray[np.float64]

    def __len__(self) -> int:
        return len(self.assignment)

    def projection(self, j: int) -> Projection:
        return Projection(float(self.distance[j]), float(self.param[j]), int(self.assignment[j]))


def _vertices_of(line) -> NDArray[np.float64]:
    if isinstance(line, Polyline):
        return line.vertices
    return Polyline(line).vertices


def nearest_segments(points: ArrayLike, vertices: ArrayLike) -> Partition:
    """Assign each point to the polyline segment with the smallest clamped distance.

    ``vertices`` may be a :class:`Polyline` or a raw ``(K, 2)`` vertex array
    (consecutive duplicates are rejected). Ties go to the lowest segment index.
    """
    P = as_points(points)
    V = _vertices_of(vertices)
    ax = V[:-1, 0]
    ay = V[:-1, 1]
    dx = V[1:, 0] - ax
    dy = V[1:, 1] - ay
    dd = dx * dx + dy * dy
    n = len(P)
    k = len(ax)
    assignment = np.empty(n, dtype=np.intp)
    distance = np.empty(n, dtype=np.float64)
    param = np.empty(n, dtype=np.float64)
    rows = max(1, _BLOCK_CELLS // max(k, 1))
    for lo in range(0, n, rows):
        hi = min(n, lo + rows)
        px = P[lo:hi, 0:1]
        py = P[lo:hi, 1:2]
        d, t = _clamped(px, py, ax, ay, dx, dy, dd)
        best = np.argmin(d, axis=1)
        idx = np.arange(hi - lo)
        assignment[lo:hi] = best
        distance[lo:hi] = d[idx, best]
        param[lo:hi] = t[idx, best]
    for arr in (assignment, distance, param):
        arr.flags.writeable = False
    return Partition(assignment, distance, param)


def assign_points(points: ArrayLike, line) -> Partition:
    """Partition ``points`` among the segments of ``line`` by the nearest rule."""
    P = as_points(points)
    if len(P) == 0:
        raise GeometryError("cannot partition an empty point set")
    return nearest_segments(P, line)


def lateral_distances(points: ArrayLike, line) -> NDArray[np.float64]:
    """Clamped distance from every point to its assigned segment of ``line``."""
    P = as_points(points)
    if len(P) == 0:
        raise GeometryError("lateral error of an empty point set is undefined")
    return nearest_segments(P, line).distance


def mean_lateral_error(points: ArrayLike, line) -> float:
    return float(np.mean(lateral_distances(points, line)))


def max_lateral_error(points: ArrayLike, line) -> float:
    return float(np.max(lateral_distances(points, line)))


def project_onto(point, line) -> Projection:
    """Closest location on ``line`` to a single point."""
    part = nearest_segments(as_points(point), line)
    return part.projection(0)

