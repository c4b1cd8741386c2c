"""Error-data detection for single GPS tracks."""

from __future__ import annotations

from typing import Optional

import numpy as np
from numpy.typing import NDArray

from ..errors import ConfigError
from ..geometry import _clamped
from .model import Trajectory


def neighbor_deviation(points: NDArray[np.float64]) -> NDArray[np.float64]:
    """Distance of each interior point to the segment joining its two neighbours.

    Returns ``len(points) - 2`` values. Coincident neighbours degrade to plain
    point distance.
    """
    a = points[:-2]
    b = points[2:]
    p = points[1:-1]
    d = b - a
    dd = (d * d).sum(axis=1)
    out = np.hypot(p[:, 0] - a[:, 0], p[:, 1] - a[:, 1])
    ok = dd > 0
    if ok.any():
        dist, _ = _clamped(
            p[ok, 0], p[ok, 1], a[ok, 0], a[ok, 1], d[ok, 0], d[ok, 1], dd[ok]
        )
        out[ok] = dist
    return out


def detect_outliers(
    track: Trajectory,
    speed_cap: Optional[float] = None,
    mad_k: Optional[float] = 6.0,
) -> NDArray[np.bool_]:
    """Flag implausible fixes in ``track``.

    Two independent gates, each disabled by passing ``None``:

    * speed: a fix is flagged when reaching it from the last unflagged fix
      would take more than ``speed_cap`` m/s (needs timestamps);
    * geometry: an interior fix is flagged when its distance to the segment
      between its neighbours exceeds ``mad_k`` times the track median of that
      distance. Endpoints are never flagged by this gate.

    Tracks shorter than 3 points come back unflagged.
    """
    if speed_cap is not None and not speed_cap > 0:
        raise ConfigError(f"speed_cap must be > 0, got {speed_cap!r}")
    if mad_k is not None and not mad_k > 0:
        raise ConfigError(f"mad_k must be > 0, got {mad_k!r}")
    P = track.points
    n = len(P)
    flags = np.zeros(n, dtype=bool)
    if n < 3:
        return flags

    if mad_k is not None:
        dev = neighbor_deviation(P)
        med = float(np.median(dev))
        flags[1:-1] |= dev > mad_k * med

    if speed_cap is not None and track.timestamps is not None:
        ts = track.timestamps
        ref = 0
        for j in range(1, n):
            if flags[j]:
                continue
            dist = float(np.hypot(*(P[j] - P[ref])))
            if dist / (ts[j] - ts[ref]) > speed_cap:
                flags[j] = True
            else:
                ref = j
    return flags


def drop_outliers(track: Trajectory, flags: NDArray[np.bool_]) -> Trajectory:
    keep = ~np.asarray(flags, dtype=bool)
    ts = None if track.timestamps is None else track.timestamps[keep]
    return Trajectory(track.track_id, track.points[keep], ts)
