"""Equirectangular projection between WGS84 degrees and a local planar frame in meters."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from numpy.typing import NDArray

from ..errors import ProjectionRangeError
from .model import RawFix

EARTH_RADIUS_M = 6_371_000.0
# beyond this offset from the origin the flat-earth error stops being negligible
MAX_OFFSET_DEG = 1.0

# used when planar data has to be written out in degrees and no origin is known
DEFAULT_ORIGIN = RawFix(latitude=39.95, longitude=116.34, track_id="origin")


def _wrap_lon(d):
    return (np.asarray(d, dtype=np.float64) + 180.0) % 360.0 - 180.0


def project_latlon(lat, lon, lat0: float, lon0: float) -> NDArray[np.float64]:
    """Project degree arrays around ``(lat0, lon0)``; returns an ``(N, 2)`` array of (x, y)."""
    lat = np.atleast_1d(np.asarray(lat, dtype=np.float64))
    lon = np.atleast_1d(np.asarray(lon, dtype=np.float64))
    dlat = lat - lat0
    dlon = _wrap_lon(lon - lon0)
    bad = (np.abs(dlat) > MAX_OFFSET_DEG) | (np.abs(dlon) > MAX_OFFSET_DEG)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise ProjectionRangeError(
            f"fix #{i} ({lat[i]:.6f}, {lon[i]:.6f}) lies more than {MAX_OFFSET_DEG} degree "
            f"from the projection origin ({lat0:.6f}, {lon0:.6f})"
        )
    x = EARTH_RADIUS_M * np.radians(dlon) * math.cos(math.radians(lat0))
    y = EARTH_RADIUS_M * np.radians(dlat)
    return np.column_stack([x, y])


def project_to_local(fixes: Sequence[RawFix], origin: RawFix) -> NDArray[np.float64]:
    """Planar (x east, y north) meters of ``fixes`` relative to ``origin``."""
    lat = [f.latitude for f in fixes]
    lon = [f.longitude for f in fixes]
    if not fixes:
        return np.empty((0, 2))
    return project_latlon(lat, lon, origin.latitude, origin.longitude)


def local_to_geographic(points, origin: RawFix) -> tuple:
    """Inverse of :func:`project_to_local`; returns ``(lat, lon)`` degree arrays."""
    P = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    lat0 = origin.latitude
    lat = lat0 + np.degrees(P[:, 1] / EARTH_RADIUS_M)
    lon = origin.longitude + np.degrees(P[:, 0] / (EARTH_RADIUS_M * math.cos(math.radians(lat0))))
    return lat, _wrap_lon(lon)


def haversine_m(lat1, lon1, lat2, lon2) -> NDArray[np.float64]:
    """Great-circle distance on the same spherical earth."""
    p1, p2 = np.radians(lat1), np.radians(lat2)
    dp = p2 - p1
    dl = np.radians(_wrap_lon(np.asarray(lon2) - np.asarray(lon1)))
    h = np.sin(dp / 2) ** 2 + np.cos(p1) * np.cos(p2) * np.sin(dl / 2) ** 2
    return 2 * EARTH_RADIUS_M * np.arcsin(np.sqrt(h))
