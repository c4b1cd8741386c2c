"""Fuse many noisy GPS tracks of one path into a compact polyline skeleton."""

from .fusion import FusionConfig, FusionResult, ara_fuse, dp_simplify, fuse, mda_fuse, order_for_dp
from .geometry import (
    Partition,
    PlanarPoint,
    Polyline,
    Projection,
    Segment,
    assign_points,
    line_distance,
    max_lateral_error,
    mean_lateral_error,
    segment_distance,
)
from .metrics import ComparisonTable, MetricsReport, compare, evaluate

__all__ = [
    "ComparisonTable",
    "FusionConfig",
    "FusionResult",
    "MetricsReport",
    "Partition",
    "PlanarPoint",
    "Polyline",
    "Projection",
    "Segment",
    "ara_fuse",
    "assign_points",
    "compare",
    "dp_simplify",
    "evaluate",
    "fuse",
    "line_distance",
    "max_lateral_error",
    "mda_fuse",
    "mean_lateral_error",
    "order_for_dp",
    "segment_distance",
]

__version__ = "0.1.0"
