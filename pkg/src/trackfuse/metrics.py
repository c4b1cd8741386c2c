"""Five-figure evaluation of a fused polyline and cross-algorithm comparison.

Metrics per run: operation time ``t``, storage ``i`` (vertex count),
reduction rate ``r = i / n * 100``, and the mean and maximum lateral error of
the data points against their nearest segment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import TrackFuseError
from .fusion import FusionResult
from .geometry import Polyline, as_points, lateral_distances

METRICS = ("runtime_t", "storage_i", "reduction_r", "mean_error", "max_error")
# columns whose values do not depend on wall-clock timing
STABLE_COLUMNS = ("algorithm", "storage_i", "total_n", "reduction_r", "mean_error", "max_error")


class ComparisonError(TrackFuseError, ValueError):
    exit_code = 2


@dataclass(frozen=True)
class MetricsReport:
    algorithm: str
    runtime_t: float
    storage_i: int
    total_n: int
    reduction_r: float
    mean_error: float
    max_error: float

    def row(self, include_runtime: bool = True) -> dict:
        out = {"algorithm": self.algorithm}
        if include_runtime:
            out["runtime_t"] = self.runtime_t
        for key in STABLE_COLUMNS[1:]:
            out[key] = getattr(self, key)
        return out


def reduction_rate(storage_i: int, total_n: int) -> float:
    return storage_i / total_n * 100


def evaluate(points, result, algorithm: Optional[str] = None) -> MetricsReport:
    """Score a :class:`FusionResult` (or bare :class:`Polyline`) against ``points``.

    ``points`` must be the same set the algorithm consumed. A bare polyline has
    no runtime, so ``runtime_t`` is NaN.
    """
    P = as_points(points)
    if len(P) == 0:
        raise TrackFuseError("cannot evaluate against an empty point set")
    if isinstance(result, FusionResult):
        line, runtime, name = result.polyline, result.runtime_seconds, result.algorithm
    elif isinstance(result, Polyline):
        line, runtime, name = result, math.nan, "polyline"
    else:
        raise TypeError(f"expected FusionResult or Polyline, got {type(result).__name__}")
    d = lateral_distances(P, line)
    i = len(line)
    return MetricsReport(
        algorithm=algorithm or name,
        runtime_t=float(runtime),
        storage_i=i,
        total_n=len(P),
        reduction_r=reduction_rate(i, len(P)),
        mean_error=float(np.mean(d)),
        max_error=float(np.max(d)),
    )


def _ranking(reports: Sequence[MetricsReport], metric: str) -> tuple:
    """``(algorithm, rank)`` pairs, best first; equal values share the lower rank."""
    def key(r):
        v = getattr(r, metric)
        return (math.isnan(v), v if not math.isnan(v) else 0.0, r.algorithm)

    ordered = sorted(reports, key=key)
    out = []
    prev = None
    rank = 0
    for pos, r in enumerate(ordered, start=1):
        v = getattr(r, metric)
        if math.isnan(v):
            out.append((r.algorithm, None))
            continue
        if v != prev:
            rank = pos
            prev = v
        out.append((r.algorithm, rank))
    return tuple(out)


def ordering_checks(reports: Sequence[MetricsReport]) -> dict:
    """Check the expected qualitative ordering between MDA, ARA and DPA.

    Returns ``{description: bool}``; empty unless all three algorithms are present.
    """
    by = {r.algorithm.upper(): r for r in reports}
    if not {"MDA", "ARA", "DPA"} <= by.keys():
        return {}
    mda, ara, dpa = by["MDA"], by["ARA"], by["DPA"]
    checks = {
        "runtime DPA < MDA": dpa.runtime_t < mda.runtime_t,
        "runtime ARA < MDA": ara.runtime_t < mda.runtime_t,
        "runtime DPA < ARA": dpa.runtime_t < ara.runtime_t,
        "mean_error ARA <= MDA": ara.mean_error <= mda.mean_error,
        "mean_error MDA <= DPA": mda.mean_error <= dpa.mean_error,
    }
    checks["runtime DPA < ARA < MDA"] = checks["runtime DPA < ARA"] and checks["runtime ARA < MDA"]
    checks["mean_error ARA <= MDA <= DPA"] = (
        checks["mean_error ARA <= MDA"] and checks["mean_error MDA <= DPA"]
    )
    return checks


@dataclass(frozen=True)
class ComparisonTable:
    reports: tuple
    ranks: dict = field(default_factory=dict)
    orderings: dict = field(default_factory=dict)

    def rank_of(self, algorithm: str, metric: str):
        return dict(self.ranks[metric])[algorithm]

    @property
    def violations(self) -> list:
        return [name for name, ok in self.orderings.items() if not ok]

    def to_text(self, include_runtime: bool = True) -> str:
        cols = ["algorithm"] + (["runtime_t"] if include_runtime else []) + list(STABLE_COLUMNS[1:])
        rows = [cols]
        for r in self.reports:
            vals = r.row(include_runtime)
            cells = []
            for c in cols:
                v = vals[c]
                if isinstance(v, float):
                    cells.append("nan" if math.isnan(v) else f"{v:.4f}")
                else:
                    cells.append(str(v))
            rows.append(cells)
        widths = [max(len(row[k]) for row in rows) for k in range(len(cols))]
        lines = ["  ".join(cell.rjust(w) for cell, w in zip(row, widths)) for row in rows]
        lines.insert(1, "  ".join("-" * w for w in widths))
        if self.orderings:
            lines.append("")
            for name, ok in self.orderings.items():
                lines.append(f"{'holds   ' if ok else 'VIOLATED'}  {name}")
        return "\n".join(lines)

    def to_csv(self, include_runtime: bool = False) -> str:
        """Header plus one comma-separated row per algorithm, floats in shortest round-trip form."""
        cols = ["algorithm"] + (["runtime_t"] if include_runtime else []) + list(STABLE_COLUMNS[1:])
        metrics = [m for m in METRICS if include_runtime or m != "runtime_t"]
        cols += [f"rank_{m}" for m in metrics]
        lines = [",".join(cols)]
        for r in self.reports:
            vals = r.row(include_runtime)
            cells = [_cell(vals[c]) for c in cols if not c.startswith("rank_")]
            cells += [_cell(self.rank_of(r.algorithm, m)) for m in metrics]
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def compare(reports: Sequence[MetricsReport]) -> ComparisonTable:
    """Rank reports on every metric (lower is better, ties by algorithm name)."""
    reports = tuple(reports)
    if len(reports) < 2:
        raise ComparisonError("comparison needs at least 2 reports")
    ns = {r.total_n for r in reports}
    if len(ns) != 1:
        raise ComparisonError(f"reports cover different point counts: {sorted(ns)}")
    ordered = tuple(sorted(reports, key=lambda r: r.algorithm))
    ranks = {m: _ranking(ordered, m) for m in METRICS}
    return ComparisonTable(ordered, ranks, ordering_checks(ordered))
