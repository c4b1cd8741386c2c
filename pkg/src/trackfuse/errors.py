"""Exception hierarchy shared by the library and the command-line front end."""

from __future__ import annotations


class TrackFuseError(Exception):
    """Base class for every error raised by trackfuse."""

    exit_code = 1


class GeometryError(TrackFuseError, ValueError):
    """Invalid geometric input (non-finite coordinates, degenerate segments)."""

    exit_code = 3


class DegenerateSegmentError(GeometryError):
    pass


class ConfigError(TrackFuseError, ValueError):
    """A fusion or generator configuration that cannot produce a result."""

    exit_code = 2


class FusionError(TrackFuseError, ValueError):
    exit_code = 4


class DegenerateRadiusError(FusionError):
    """The centroid neighbourhood around a data point came out empty."""

    def __init__(self, index: int, point, radius: float):
        self.index = index
        self.point = tuple(point)
        self.radius = radius
        super().__init__(
            f"no data points within radius {radius!r} of point #{index} "
            f"at ({self.point[0]:.3f}, {self.point[1]:.3f})"
        )


class DataFormatError(TrackFuseError, ValueError):
    """Malformed input file. ``line`` is 1-based when known."""

    exit_code = 3

    def __init__(self, message: str, path=None, line: int | None = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
        if line is not None:
            where = f"{where}:line {line}" if where else f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)


class ProjectionRangeError(TrackFuseError, ValueError):
    exit_code = 3
