"""Trajectory ingestion, projection, outlier screening and synthetic data."""

from .formats import read_fixes, read_polyline, read_tracks, write_polyline, write_tracks
from .model import (
    GeneratorConfig,
    PolylineShape,
    RawFix,
    StadiumShape,
    SyntheticDataset,
    Trajectory,
    stack_points,
)
from .outliers import detect_outliers, drop_outliers
from .projection import local_to_geographic, project_to_local
from .synthetic import generate_tracks

__all__ = [
    "GeneratorConfig",
    "PolylineShape",
    "RawFix",
    "StadiumShape",
    "SyntheticDataset",
    "Trajectory",
    "detect_outliers",
    "drop_outliers",
    "generate_tracks",
    "local_to_geographic",
    "project_to_local",
    "read_fixes",
    "read_polyline",
    "read_tracks",
    "stack_points",
    "write_polyline",
    "write_tracks",
]
