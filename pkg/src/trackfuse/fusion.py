"""Multi-track fusion: maximum-distance insertion (MDA), block sweep (ARA) and Douglas-Peucker (DPA).

All three turn a cloud of noisy planar GPS points into a :class:`Polyline`
skeleton. :func:`fuse` dispatches on an algorithm tag and handles the
per-algorithm preparation (endpoints for MDA, point ordering for DPA).
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.sparse.csgraph import dijkstra, minimum_spanning_tree
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist

from .data.model import Trajectory, stack_points
from .errors import ConfigError, DegenerateRadiusError, FusionError, GeometryError
from .geometry import Polyline, as_points, line_distances, nearest_segments

log = logging.getLogger(__name__)

ALGORITHMS = ("MDA", "ARA", "DPA")

# ARA chain vertices within this distance [m] of the line through their
# neighbours are pruned; 1 mm is below the 9-decimal resolution of stored degrees
_COLLINEAR_TOL = 1e-3
# a start-end chord shorter than this fraction of the data diagonal is treated
# as a closed loop when choosing the DPA ordering seed
_LOOP_CHORD_RATIO = 0.1


@dataclass(frozen=True)
class FusionConfig:
    """Tunables for every algorithm. Lengths are in meters.

    ``cluster_gap`` defaults to ``error_threshold`` when left as ``None``.
    """

    error_threshold: float = 1.0
    radius: float = 3.0
    block_width: float = 3.0
    step: float = 3.0
    cluster_gap: Optional[float] = None
    dp_epsilon: float = 6.0
    max_vertices: int = 2000
    max_iterations: int = 5000

    def __post_init__(self):
        for name in ("error_threshold", "radius", "block_width", "step", "dp_epsilon"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ConfigError(f"{name} must be a finite number > 0, got {value!r}")
        if self.cluster_gap is not None and not (
            math.isfinite(self.cluster_gap) and self.cluster_gap > 0
        ):
            raise ConfigError(f"cluster_gap must be > 0, got {self.cluster_gap!r}")
        if self.step > self.block_width:
            raise ConfigError(
                f"step ({self.step}) must not exceed block_width ({self.block_width})"
            )
        if self.max_vertices < 2:
            raise ConfigError("max_vertices must be >= 2")
        if self.max_iterations < 1:
            raise ConfigError("max_iterations must be >= 1")

    @property
    def gap(self) -> float:
        return self.error_threshold if self.cluster_gap is None else self.cluster_gap

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class FusionResult:
    polyline: Polyline
    algorithm: str
    iterations: int
    converged: bool
    runtime_seconds: float
    error_trace: tuple = field(default_factory=tuple)

    @property
    def final_error(self) -> float:
        return self.error_trace[-1] if self.error_trace else math.nan


def _same(p, q) -> bool:
    return bool(p[0] == q[0] and p[1] == q[1])


# ---------------------------------------------------------------------------
# MDA


def mda_fuse(points: ArrayLike, start, end, config: FusionConfig) -> FusionResult:
    """Grow a polyline from the ``start``-``end`` chord by repeated worst-point insertion.

    Each round takes the data point farthest from its nearest segment, replaces
    it by the centroid of all data points within ``config.radius`` of it, and
    splices that centroid into the chain at the segment it projects onto. The
    new vertex is then re-centred once on the nearby points that now belong to
    its two incident segments. The loop stops as soon as the mean lateral error
    drops to ``config.error_threshold`` or a cap is reached. ``start`` and
    ``end`` are never moved.

    Raises
    ------
    FusionError
        Fewer than two points, or ``start == end``.
    DegenerateRadiusError
        The neighbourhood of the worst point is empty.
    """
    t0 = time.perf_counter()
    P = as_points(points)
    if len(P) < 2:
        raise FusionError(f"MDA needs at least 2 points, got {len(P)}")
    a = as_points(start)[0]
    b = as_points(end)[0]
    if _same(a, b):
        raise FusionError(f"MDA start and end coincide at {a.tolist()}")
    sigma = config.radius
    V = np.vstack([a, b])
    blocked = np.zeros(len(P), dtype=bool)

    part = nearest_segments(P, V)
    D = float(part.distance.mean())
    trace = [D]
    iterations = 0
    converged = D <= config.error_threshold
    while not converged:
        if len(V) >= config.max_vertices or iterations >= config.max_iterations:
            break
        score = np.where(blocked, -np.inf, part.distance)
        j = int(np.argmax(score))
        if not np.isfinite(score[j]):
            log.debug("MDA: every candidate point is exhausted")
            break
        iterations += 1
        near = np.hypot(P[:, 0] - P[j, 0], P[:, 1] - P[j, 1]) < sigma
        if not near.any():
            raise DegenerateRadiusError(j, P[j], sigma)
        c = P[near].mean(axis=0)
        k = int(nearest_segments(c[None, :], V).assignment[0])
        if _same(c, V[k]) or _same(c, V[k + 1]):
            # the neighbourhood collapses onto an existing vertex; skip this point
            blocked[j] = True
            trace.append(D)
            continue
        V = np.insert(V, k + 1, c, axis=0)
        part = nearest_segments(P, V)

        owned = (part.assignment == k) | (part.assignment == k + 1)
        owned &= np.hypot(P[:, 0] - c[0], P[:, 1] - c[1]) < sigma
        if owned.any():
            c2 = P[owned].mean(axis=0)
            if not (_same(c2, c) or _same(c2, V[k]) or _same(c2, V[k + 2])):
                V[k + 1] = c2
                part = nearest_segments(P, V)
        D = float(part.distance.mean())
        trace.append(D)
        converged = D <= config.error_threshold

    return FusionResult(
        polyline=Polyline(V),
        algorithm="MDA",
        iterations=iterations,
        converged=converged,
        runtime_seconds=time.perf_counter() - t0,
        error_trace=tuple(trace),
    )


# ---------------------------------------------------------------------------
# ARA (block sweep)


def split_by_gap(values: NDArray[np.float64], gap: float) -> list:
    """Split sorted ``values`` wherever neighbours differ by more than ``gap``.

    Returns a list of index arrays into ``values``.
    """
    if len(values) == 0:
        return []
    cuts = np.flatnonzero(np.diff(values) > gap) + 1
    return np.split(np.arange(len(values)), cuts)


def block_candidates(points: ArrayLike, config: FusionConfig) -> tuple:
    """Sweep the x-window over ``points`` and return ``(centroids, n_windows)``.

    Windows are ``[x0, x0 + w)`` for ``x0 = min_x + k*s``; the last window is
    the first one reaching past ``max_x``.
    """
    P = as_points(points)
    w, s, gap = config.block_width, config.step, config.gap
    order = np.argsort(P[:, 0], kind="stable")
    xs = P[order, 0]
    xmin, xmax = xs[0], xs[-1]
    out = []
    k = 0
    while True:
        lo = xmin + k * s
        i0 = np.searchsorted(xs, lo, side="left")
        i1 = np.searchsorted(xs, lo + w, side="left")
        if i1 > i0:
            block = P[order[i0:i1]]
            block = block[np.argsort(block[:, 1], kind="stable")]
            for idx in split_by_gap(block[:, 1], gap):
                out.append(block[idx].mean(axis=0))
        k += 1
        if lo + w > xmax:
            break
    return np.array(out).reshape(-1, 2), k


def merge_close(candidates: NDArray[np.float64], radius: float) -> NDArray[np.float64]:
    """Merge candidates lying within ``radius`` of each other into their mean.

    Groups are formed greedily in input order: the first unmerged candidate
    claims every unmerged candidate strictly closer than ``radius``. Grouping
    is not transitive, so a dense run of candidates cannot collapse into one.
    """
    n = len(candidates)
    if n < 2:
        return candidates
    tree = cKDTree(candidates)
    taken = np.zeros(n, dtype=bool)
    merged = []
    for i in range(n):
        if taken[i]:
            continue
        near = np.asarray(tree.query_ball_point(candidates[i], radius), dtype=np.intp)
        d = np.hypot(*(candidates[near] - candidates[i]).T)
        near = near[(d < radius) & ~taken[near]]
        near = np.union1d(near, [i])
        taken[near] = True
        merged.append(candidates[near].mean(axis=0))
    return np.array(merged)


def _leftmost(points: NDArray[np.float64]) -> int:
    return int(np.lexsort((points[:, 1], points[:, 0]))[0])


def chain_order(candidates: NDArray[np.float64]) -> NDArray[np.intp]:
    """Order scattered vertices into a chain.

    The longest path of the Euclidean minimum spanning tree serves as a
    backbone (oriented to start at its leftmost end); every vertex is then
    ranked by the arc length of its projection onto that backbone, ties by
    input index. On x-monotone input this is the left-to-right order.
    """
    n = len(candidates)
    if n <= 2:
        return np.lexsort((candidates[:, 1], candidates[:, 0]))
    tree = minimum_spanning_tree(cdist(candidates, candidates))
    d0 = dijkstra(tree, directed=False, indices=_leftmost(candidates))
    a = int(np.argmax(d0))
    da, pred = dijkstra(tree, directed=False, indices=a, return_predecessors=True)
    b = int(np.argmax(da))
    path = [b]
    while path[-1] != a:
        path.append(int(pred[path[-1]]))
    ends = candidates[[a, b]]
    if _leftmost(ends) == 0:
        path.reverse()  # walk from a to b
    backbone = Polyline(candidates[path])
    part = nearest_segments(candidates, backbone)
    key = backbone.arc_position(part.assignment, part.param)
    return np.lexsort((np.arange(n), key))


def _extend_ends(V: NDArray[np.float64], P: NDArray[np.float64]) -> NDArray[np.float64]:
    """Stretch the first and last segments so they cover the points lying beyond them."""
    V = V.copy()
    part = nearest_segments(P, V)
    last = len(V) - 2
    for seg, end, other, side in ((0, 0, 1, -1), (last, len(V) - 1, len(V) - 2, 1)):
        mask = part.assignment == seg
        if not mask.any():
            continue
        a, b = (V[0], V[1]) if seg == 0 else (V[-2], V[-1])
        d = b - a
        t = ((P[mask] - a) @ d) / (d @ d)
        if side < 0 and t.min() < 0:
            V[end] = a + t.min() * d
        elif side > 0 and t.max() > 1:
            V[end] = a + t.max() * d
    return V


def ara_fuse(points: ArrayLike, config: FusionConfig) -> FusionResult:
    """Block-sweep fusion.

    A window of width ``block_width`` moves along x in increments of ``step``.
    Inside each window the points are sorted by y and cut wherever two
    neighbours are more than ``cluster_gap`` apart; each cut-out cluster
    contributes its centroid. Candidates closer than ``step / 2`` are merged,
    chained with :func:`chain_order`, stripped of exactly collinear interior
    vertices, and the two end segments are stretched over any points beyond
    them.

    Sweeping is along x only; rotate y-dominant data before calling.

    Raises
    ------
    ConfigError
        The x-extent does not exceed the block width, or fewer than two
        vertices survive.
    """
    t0 = time.perf_counter()
    P = as_points(points)
    if len(P) < 2:
        raise FusionError(f"ARA needs at least 2 points, got {len(P)}")
    extent = float(P[:, 0].max() - P[:, 0].min())
    if not extent > config.block_width:
        raise ConfigError(
            f"x-extent of the data ({extent:.3f} m) must exceed the block width "
            f"({config.block_width} m)"
        )
    candidates, windows = block_candidates(P, config)
    candidates = merge_close(candidates, config.step / 2.0)
    if len(candidates) < 2:
        raise ConfigError(
            f"block sweep produced {len(candidates)} vertex; reduce block_width/step"
        )
    chain = candidates[chain_order(candidates)]
    try:
        chain = Polyline.from_points(chain).vertices
        chain = chain[dp_indices(chain, _COLLINEAR_TOL)]
        V = _extend_ends(chain, P)
        line = Polyline.from_points(V)
    except GeometryError as exc:
        raise ConfigError(f"block sweep produced a degenerate chain: {exc}") from exc
    D = float(nearest_segments(P, line).distance.mean())
    return FusionResult(
        polyline=line,
        algorithm="ARA",
        iterations=windows,
        converged=D <= config.error_threshold,
        runtime_seconds=time.perf_counter() - t0,
        error_trace=(D,),
    )


# ---------------------------------------------------------------------------
# DPA


def dp_indices(ordered: ArrayLike, epsilon: float) -> NDArray[np.intp]:
    """Indices kept by Douglas-Peucker simplification of ``ordered``.

    A point is kept when its perpendicular distance to the chord of the current
    sub-range is the largest in that range and strictly exceeds ``epsilon``.
    A chord whose ends coincide falls back to plain point distance.
    """
    P = as_points(ordered)
    n = len(P)
    if n < 2:
        raise FusionError(f"Douglas-Peucker needs at least 2 points, got {n}")
    if not epsilon >= 0:
        raise ConfigError(f"epsilon must be >= 0, got {epsilon!r}")
    keep = np.zeros(n, dtype=bool)
    keep[0] = keep[-1] = True
    stack = [(0, n - 1)]
    while stack:
        i, j = stack.pop()
        if j - i < 2:
            continue
        inner = P[i + 1 : j]
        if _same(P[i], P[j]):
            d = np.hypot(inner[:, 0] - P[i, 0], inner[:, 1] - P[i, 1])
        else:
            d = line_distances(inner, P[i], P[j])
        m = int(np.argmax(d))
        if d[m] > epsilon:
            m += i + 1
            keep[m] = True
            stack.append((m, j))
            stack.append((i, m))
    return np.flatnonzero(keep)


def dp_simplify(ordered: ArrayLike, epsilon: float) -> Polyline:
    """Douglas-Peucker simplification of an ordered point sequence."""
    P = as_points(ordered)
    return Polyline.from_points(P[dp_indices(P, epsilon)])


def _tracks_of(data) -> list:
    if isinstance(data, Trajectory):
        return [data]
    if isinstance(data, (list, tuple)) and data and all(isinstance(t, Trajectory) for t in data):
        return list(data)
    return [Trajectory("points", as_points(data))]


def order_keys(tracks: Sequence[Trajectory], seed_line) -> NDArray[np.float64]:
    """Arc-length position of every point's clamped projection onto ``seed_line``."""
    line = seed_line if isinstance(seed_line, Polyline) else Polyline(seed_line)
    P = stack_points(tracks)
    part = nearest_segments(P, line)
    return line.arc_position(part.assignment, part.param)


def order_for_dp(tracks: Sequence[Trajectory], seed_line) -> NDArray[np.float64]:
    """All points of ``tracks`` sorted along ``seed_line`` (ties keep input order)."""
    tracks = _tracks_of(tracks)
    P = stack_points(tracks)
    key = order_keys(tracks, seed_line)
    return P[np.lexsort((np.arange(len(P)), key))]


def default_endpoints(tracks: Sequence[Trajectory]) -> tuple:
    """Mean of the first fixes and mean of the last fixes across tracks."""
    first = np.mean([t.points[0] for t in tracks], axis=0)
    last = np.mean([t.points[-1] for t in tracks], axis=0)
    return first, last


def dp_seed_line(tracks: Sequence[Trajectory]) -> Polyline:
    """Seed for ordering DPA input: the start-end chord, or a track when the data loops.

    When the chord is shorter than a tenth of the data's bounding-box diagonal
    (a closed circuit) the longest track is used instead.
    """
    start, end = default_endpoints(tracks)
    P = stack_points(tracks)
    diag = float(np.hypot(*(P.max(axis=0) - P.min(axis=0))))
    chord = float(np.hypot(*(end - start)))
    if chord > 0 and chord >= _LOOP_CHORD_RATIO * diag:
        return Polyline([start, end])
    longest = max(tracks, key=len)
    return Polyline.from_points(longest.points)


def fuse(data, algorithm: str, config: FusionConfig = FusionConfig()) -> FusionResult:
    """Run one algorithm on tracks (or a bare point array, taken as a single track).

    ``runtime_seconds`` covers the preparation and the algorithm body measured
    with a monotonic clock; no I/O happens in here.
    """
    tag = str(algorithm).upper()
    if tag not in ALGORITHMS:
        raise ConfigError(f"unknown algorithm {algorithm!r}; choose one of {', '.join(ALGORITHMS)}")
    t0 = time.perf_counter()
    tracks = _tracks_of(data)
    P = stack_points(tracks)
    if tag == "MDA":
        start, end = default_endpoints(tracks)
        result = mda_fuse(P, start, end, config)
    elif tag == "ARA":
        result = ara_fuse(P, config)
    else:
        if len(P) < 2:
            raise FusionError(f"DPA needs at least 2 points, got {len(P)}")
        ordered = order_for_dp(tracks, dp_seed_line(tracks))
        line = dp_simplify(ordered, config.dp_epsilon)
        D = float(nearest_segments(P, line).distance.mean())
        result = FusionResult(
            polyline=line,
            algorithm="DPA",
            iterations=1,
            converged=D <= config.error_threshold,
            runtime_seconds=0.0,
            error_trace=(D,),
        )
    return replace(result, runtime_seconds=time.perf_counter() - t0)
