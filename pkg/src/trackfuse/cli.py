"""Command-line front end: ``trackfuse {generate,fuse,compare,eval}``.

Exit codes
----------
0  every requested output was written
2  invalid flags or configuration
3  unreadable or malformed input
4  a fusion algorithm failed (``compare`` still writes the other results)
5  an output file could not be written
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from dataclasses import asdict, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .data.formats import (
    FORMATS,
    fixes_to_tracks,
    first_fix,
    read_fixes,
    read_polyline,
    write_polyline,
    write_tracks,
)
from .data.model import GeneratorConfig, PolylineShape, StadiumShape, stack_points
from .data.outliers import detect_outliers, drop_outliers
from .data.projection import DEFAULT_ORIGIN
from .data.synthetic import generate_tracks
from .errors import ConfigError, TrackFuseError
from .fusion import ALGORITHMS, FusionConfig, dp_simplify, dp_seed_line, fuse, order_for_dp
from .geometry import lateral_distances
from .metrics import compare, evaluate
from .plot import render_svg

log = logging.getLogger("trackfuse")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_FUSION = 4
EXIT_OUTPUT = 5

# bumped whenever a machine-readable output changes layout
SCHEMA_VERSION = 1
DEFAULT_DP_SWEEP = (0.5, 1.0, 2.0, 4.0, 6.0, 8.0, 16.0)


class OutputError(TrackFuseError):
    exit_code = EXIT_OUTPUT


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


class _Run:
    """Collects outputs of one command and writes the manifest last."""

    def __init__(self, args, argv, command: str):
        self.enabled = not (command == "eval" and args.out is None)
        self.out = Path(args.out or ".")
        self.argv = list(argv)
        self.command = command
        self.seed = args.seed
        self.config: dict = {}
        self.inputs: dict = {}
        self.outputs: list = []
        self.volatile: list = []
        if not self.enabled:
            return
        try:
            self.out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise OutputError(f"cannot create output directory {self.out}: {exc.strerror}") from None

    def add_input(self, path):
        if path is not None:
            self.inputs[str(path)] = _sha256(path)

    def path(self, name: str) -> Path:
        return self.out / name

    def write_text(self, name: str, text: str, volatile: bool = False) -> Optional[Path]:
        if not self.enabled:
            return None
        p = self.path(name)
        try:
            p.write_text(text, encoding="utf-8")
        except OSError as exc:
            raise OutputError(f"cannot write {p}: {exc.strerror}") from None
        self._record(p, volatile)
        return p

    def wrote(self, p: Path, volatile: bool = False):
        self._record(p, volatile)

    def _record(self, p: Path, volatile: bool):
        (self.volatile if volatile else self.outputs).append(p.name)

    def finish(self) -> Optional[Path]:
        if not self.enabled:
            return None
        manifest = {
            "tool": "trackfuse",
            "version": __version__,
            "schema_version": SCHEMA_VERSION,
            "command": self.command,
            "argv": self.argv,
            "seed": self.seed,
            "config": self.config,
            "inputs": self.inputs,
            "outputs": {name: _sha256(self.path(name)) for name in self.outputs},
            "timing_dependent_outputs": self.volatile,
        }
        return self.write_text("manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _writer(fn, path, *a, **kw):
    try:
        fn(path, *a, **kw)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror}") from None


# ---------------------------------------------------------------------------
# argument parsing


def _positive(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a value > 0, got {text}")
    return v


def _nonneg(text: str) -> float:
    v = float(text)
    if not v >= 0:
        raise argparse.ArgumentTypeError(f"expected a value >= 0, got {text}")
    return v


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _vertices(text: str):
    try:
        pts = [tuple(float(c) for c in pair.split(",")) for pair in text.split(";") if pair.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError("vertices must look like 'x1,y1;x2,y2;...'") from None
    if any(len(p) != 2 for p in pts) or len(pts) < 2:
        raise argparse.ArgumentTypeError("need at least two 'x,y' vertices")
    return tuple(pts)


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=_u64, default=42, help="random seed (generate only uses it)")
    p.add_argument("--out", default=None,
                   help="output directory (default: current; eval writes files only when given)")
    p.add_argument("--format", choices=FORMATS, default=None,
                   help="format of written geometry files")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _fusion_flags(p: argparse.ArgumentParser):
    d = FusionConfig()
    g = p.add_argument_group("fusion configuration")
    g.add_argument("--error", type=_positive, default=d.error_threshold,
                   help="mean lateral error target E [m]")
    g.add_argument("--sigma", type=_positive, default=d.radius, help="MDA neighbourhood radius [m]")
    g.add_argument("--block-width", type=_positive, default=d.block_width, help="ARA window width [m]")
    g.add_argument("--step", type=_positive, default=d.step, help="ARA window step [m]")
    g.add_argument("--cluster-gap", type=_positive, default=None,
                   help="ARA y-gap that splits clusters [m] (default: --error)")
    g.add_argument("--epsilon", type=_positive, default=d.dp_epsilon, help="DPA tolerance [m]")
    g.add_argument("--max-vertices", type=int, default=d.max_vertices)
    g.add_argument("--max-iterations", type=int, default=d.max_iterations)
    g.add_argument("--input-format", choices=FORMATS, default=None,
                   help="input format (default: from the file extension)")
    g.add_argument("--filter-outliers", action="store_true",
                   help="drop fixes flagged by the speed and geometry gates first")
    g.add_argument("--speed-cap", type=_positive, default=None, help="speed gate [m/s]")
    g.add_argument("--mad-k", type=_positive, default=6.0, help="geometry gate multiplier")


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="trackfuse", description=__doc__.splitlines()[0],
                                     parents=[common])
    parser.add_argument("--version", action="version", version=f"trackfuse {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", parents=[common], help="write a synthetic multi-track dataset")
    dflt = GeneratorConfig()
    g.add_argument("--tracks", type=int, default=dflt.num_tracks)
    g.add_argument("--points", type=int, default=dflt.points_per_track, help="points per track")
    g.add_argument("--noise", type=_nonneg, default=dflt.noise_sigma, help="noise sigma per axis [m]")
    g.add_argument("--shape", choices=("stadium", "polyline"), default="stadium")
    g.add_argument("--straight", type=_positive, default=StadiumShape().straight_length)
    g.add_argument("--radius", type=_positive, default=StadiumShape().radius)
    g.add_argument("--vertices", type=_vertices, default=None,
                   help="polyline shape vertices 'x1,y1;x2,y2;...' in meters")

    f = sub.add_parser("fuse", parents=[common], help="fuse a track file with one algorithm")
    f.add_argument("input")
    f.add_argument("--algo", choices=[a.lower() for a in ALGORITHMS], required=True)
    _fusion_flags(f)

    c = sub.add_parser("compare", parents=[common], help="run all algorithms and compare them")
    c.add_argument("input")
    c.add_argument("--truth", default=None, help="ground-truth polyline file to overlay")
    c.add_argument("--dp-sweep", type=lambda s: tuple(_positive(v) for v in s.split(",")),
                   default=DEFAULT_DP_SWEEP, help="comma-separated DPA tolerances to report")
    _fusion_flags(c)

    e = sub.add_parser("eval", parents=[common], help="score a polyline against a track file")
    e.add_argument("points")
    e.add_argument("polyline")
    e.add_argument("--input-format", choices=FORMATS, default=None)
    return parser


def _config(args) -> FusionConfig:
    return FusionConfig(
        error_threshold=args.error,
        radius=args.sigma,
        block_width=args.block_width,
        step=args.step,
        cluster_gap=args.cluster_gap,
        dp_epsilon=args.epsilon,
        max_vertices=args.max_vertices,
        max_iterations=args.max_iterations,
    )


def _load(args, run: _Run):
    groups = read_fixes(args.input, args.input_format)
    origin = first_fix(groups)
    tracks = fixes_to_tracks(groups, origin, args.input)
    run.add_input(args.input)
    if args.filter_outliers:
        cleaned = []
        for t in tracks:
            flags = detect_outliers(t, speed_cap=args.speed_cap, mad_k=args.mad_k)
            if flags.any():
                log.info("track %s: dropping %d flagged fixes", t.track_id, int(flags.sum()))
            cleaned.append(drop_outliers(t, flags))
        tracks = cleaned
    return tracks, origin


# ---------------------------------------------------------------------------
# commands


def cmd_generate(args, run: _Run) -> int:
    if args.shape == "polyline":
        if args.vertices is None:
            raise ConfigError("--shape polyline requires --vertices")
        shape = PolylineShape(args.vertices)
    else:
        shape = StadiumShape(args.straight, args.radius)
    cfg = GeneratorConfig(shape, args.tracks, args.points, args.noise, args.seed)
    ds = generate_tracks(cfg)
    fmt = args.format or "csv"
    run.config = {"generator": asdict(cfg), "origin": asdict(DEFAULT_ORIGIN)}
    tracks_path = run.path(f"tracks.{fmt}")
    _writer(write_tracks, tracks_path, ds.tracks, DEFAULT_ORIGIN, fmt)
    run.wrote(tracks_path)
    truth_path = run.path("truth.geojson")
    _writer(write_polyline, truth_path, ds.ground_truth, "geojson", DEFAULT_ORIGIN, "ground_truth")
    run.wrote(truth_path)
    print(f"wrote {sum(len(t) for t in ds.tracks)} points in {len(ds.tracks)} tracks to {tracks_path}")
    return EXIT_OK


def cmd_fuse(args, run: _Run) -> int:
    config = _config(args)
    tracks, origin = _load(args, run)
    run.config = {"fusion": config.to_dict(), "algorithm": args.algo.upper()}
    result = fuse(tracks, args.algo, config)
    P = stack_points(tracks)
    fmt = args.format or "geojson"
    poly_path = run.path(f"polyline_{args.algo}.{fmt}")
    _writer(write_polyline, poly_path, result.polyline, fmt, origin, result.algorithm)
    run.wrote(poly_path)
    # score the polyline as stored (9-decimal degrees) so `eval` on the same
    # pair of files reproduces this report exactly
    stored = read_polyline(poly_path, fmt, origin)
    report = replace(evaluate(P, stored), algorithm=result.algorithm,
                     runtime_t=result.runtime_seconds)
    table_csv = _single_csv(report)
    run.write_text("report.csv", table_csv)
    run.write_text("timing.csv", f"algorithm,runtime_t\n{report.algorithm},{report.runtime_t!r}\n",
                   volatile=True)
    status = "converged" if result.converged else "not converged"
    print(f"{result.algorithm}: {len(result.polyline)} vertices, {status} after "
          f"{result.iterations} iterations, mean error {report.mean_error:.4f} m, "
          f"max error {report.max_error:.4f} m, r = {report.reduction_r:.4f}%, "
          f"t = {report.runtime_t:.4f} s")
    return EXIT_OK


def _single_csv(report) -> str:
    cols = ["algorithm", "storage_i", "total_n", "reduction_r", "mean_error", "max_error"]
    vals = report.row(include_runtime=False)
    return ",".join(cols) + "\n" + ",".join(
        repr(vals[c]) if isinstance(vals[c], float) else str(vals[c]) for c in cols
    ) + "\n"


def cmd_compare(args, run: _Run) -> int:
    config = _config(args)
    tracks, origin = _load(args, run)
    P = stack_points(tracks)
    run.config = {"fusion": config.to_dict(), "dp_sweep": list(args.dp_sweep)}
    truth = None
    if args.truth:
        truth = read_polyline(args.truth, None, origin)
        run.add_input(args.truth)

    fmt = args.format or "geojson"
    reports, lines, failures = [], {}, {}
    for algo in ALGORITHMS:
        try:
            result = fuse(tracks, algo, config)
        except TrackFuseError as exc:
            failures[algo] = str(exc)
            log.error("%s failed: %s", algo, exc)
            continue
        path = run.path(f"polyline_{algo.lower()}.{fmt}")
        _writer(write_polyline, path, result.polyline, fmt, origin, algo)
        run.wrote(path)
        stored = read_polyline(path, fmt, origin)
        reports.append(replace(evaluate(P, stored), algorithm=algo, runtime_t=result.runtime_seconds))
        lines[algo] = result.polyline

    out_lines = []
    if len(reports) >= 2:
        table = compare(reports)
        run.write_text("report.csv", table.to_csv(include_runtime=False))
        timing = "algorithm,runtime_t\n" + "".join(
            f"{r.algorithm},{r.runtime_t!r}\n" for r in table.reports
        )
        run.write_text("timing.csv", timing, volatile=True)
        checks = "check,holds\n" + "".join(
            f"{name},{str(ok).lower()}\n" for name, ok in table.orderings.items()
        )
        run.write_text("checks.csv", checks, volatile=True)
        out_lines.append(table.to_text())
    else:
        for r in reports:
            out_lines.append(_single_csv(r))
    for algo, msg in failures.items():
        out_lines.append(f"FAILED    {algo}: {msg}")

    sweep = ["epsilon,storage_i,mean_error,max_error"]
    if len(P) >= 2:
        ordered = order_for_dp(tracks, dp_seed_line(tracks))
        for eps in args.dp_sweep:
            line = dp_simplify(ordered, eps)
            d = lateral_distances(P, line)
            sweep.append(f"{eps!r},{len(line)},{float(np.mean(d))!r},{float(np.max(d))!r}")
    run.write_text("dp_sweep.csv", "\n".join(sweep) + "\n")

    svg = render_svg(P, lines, truth, title="raw points and fused polylines")
    run.write_text("comparison.svg", svg)
    print("\n".join(out_lines))
    return EXIT_FUSION if failures else EXIT_OK


def cmd_eval(args, run: _Run) -> int:
    groups = read_fixes(args.points, args.input_format)
    origin = first_fix(groups)
    P = stack_points(fixes_to_tracks(groups, origin, args.points))
    line = read_polyline(args.polyline, None, origin)
    run.add_input(args.points)
    run.add_input(args.polyline)
    report = evaluate(P, line)
    run.write_text("report.csv", _single_csv(report))
    print(f"storage i = {report.storage_i}, n = {report.total_n}, r = {report.reduction_r:.4f}%, "
          f"mean error = {report.mean_error:.6f} m, max error = {report.max_error:.6f} m")
    return EXIT_OK


COMMANDS = {"generate": cmd_generate, "fuse": cmd_fuse, "compare": cmd_compare, "eval": cmd_eval}


def main(argv: Optional[list] = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        run = _Run(args, argv, args.command)
        code = COMMANDS[args.command](args, run)
        run.finish()
        return code
    except TrackFuseError as exc:
        print(f"trackfuse {args.command}: error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
