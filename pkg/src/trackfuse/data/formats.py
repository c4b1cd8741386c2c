"""Reading and writing tracks and polylines as CSV, GeoJSON and GPX.

Files always carry WGS84 degrees. Planar coordinates are obtained by projecting
around an origin fix; readers default to the first fix in the file.

CSV layout::

    track_id,lat,lon,timestamp

``timestamp`` is optional and may be epoch seconds or ISO-8601.
"""

from __future__ import annotations

import csv
import json
import math
import xml.etree.ElementTree as ET
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from ..errors import DataFormatError, GeometryError, TrackFuseError
from ..geometry import Polyline
from .model import RawFix, Trajectory
from .projection import DEFAULT_ORIGIN, local_to_geographic, project_to_local

FORMATS = ("csv", "geojson", "gpx")
COORD_DECIMALS = 9
GPX_NS = "http://www.topografix.com/GPX/1/1"


def detect_format(path) -> str:
    suffix = Path(path).suffix.lower().lstrip(".")
    if suffix in ("json", "geojson"):
        return "geojson"
    if suffix in FORMATS:
        return suffix
    raise DataFormatError(f"cannot infer a format from extension {suffix!r}", path)


def _check_format(fmt: Optional[str], path, allowed=FORMATS) -> str:
    fmt = detect_format(path) if fmt is None else fmt.lower()
    if fmt not in allowed:
        raise DataFormatError(f"unknown format {fmt!r} (expected one of {', '.join(allowed)})", path)
    return fmt


def parse_timestamp(text: str) -> float:
    """Epoch seconds from either a number or an ISO-8601 string (naive means UTC)."""
    text = text.strip()
    try:
        value = float(text)
    except ValueError:
        iso = text[:-1] + "+00:00" if text.endswith(("Z", "z")) else text
        dt = datetime.fromisoformat(iso)
        if dt.tzinfo is None:
            dt = dt.replace(tzinfo=timezone.utc)
        return dt.timestamp()
    if not math.isfinite(value):
        raise ValueError(f"non-finite timestamp {text!r}")
    return value


def _fix(lat: float, lon: float, ts, track_id: str, path, line) -> RawFix:
    try:
        return RawFix(lat, lon, ts, track_id)
    except GeometryError as exc:
        raise DataFormatError(str(exc), path, line) from None


# ---------------------------------------------------------------------------
# readers


def _read_csv(path) -> dict:
    groups: dict = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in ("track_id", "lat", "lon") if c not in header]
        if missing:
            raise DataFormatError(f"missing column(s) {', '.join(missing)}", path, 1)
        for row in reader:
            line = reader.line_num
            if None in row or any(row.get(c) is None for c in ("track_id", "lat", "lon")):
                raise DataFormatError("wrong number of fields", path, line)
            try:
                lat = float(row["lat"])
                lon = float(row["lon"])
            except ValueError:
                raise DataFormatError(
                    f"non-numeric coordinate lat={row['lat']!r} lon={row['lon']!r}", path, line
                ) from None
            ts = None
            raw_ts = (row.get("timestamp") or "").strip()
            if raw_ts:
                try:
                    ts = parse_timestamp(raw_ts)
                except ValueError:
                    raise DataFormatError(f"unparseable timestamp {raw_ts!r}", path, line) from None
            tid = row["track_id"].strip()
            groups.setdefault(tid, []).append(_fix(lat, lon, ts, tid, path, line))
    return groups


def _read_geojson(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"invalid JSON: {exc.msg}", path, exc.lineno) from None
    if not isinstance(doc, dict):
        raise DataFormatError("top-level GeoJSON value must be an object", path)
    if doc.get("type") == "FeatureCollection":
        features = doc.get("features")
        if not isinstance(features, list):
            raise DataFormatError("FeatureCollection without a features list", path)
    elif doc.get("type") == "Feature":
        features = [doc]
    else:
        features = [{"type": "Feature", "geometry": doc, "properties": {}}]
    groups: dict = {}
    for i, feat in enumerate(features):
        geom = (feat or {}).get("geometry") or {}
        if geom.get("type") != "LineString":
            raise DataFormatError(f"feature #{i} is not a LineString", path)
        props = feat.get("properties") or {}
        tid = str(props.get("track_id", i))
        coords = geom.get("coordinates")
        if not isinstance(coords, list):
            raise DataFormatError(f"feature #{i} has no coordinate list", path)
        stamps = props.get("timestamps")
        if stamps is not None and len(stamps) != len(coords):
            raise DataFormatError(f"feature #{i}: timestamps do not match coordinates", path)
        fixes = groups.setdefault(tid, [])
        for k, c in enumerate(coords):
            try:
                lon, lat = float(c[0]), float(c[1])
            except (TypeError, ValueError, IndexError):
                raise DataFormatError(f"feature #{i}, coordinate #{k} is malformed: {c!r}", path) from None
            ts = None if stamps is None or stamps[k] is None else float(stamps[k])
            fixes.append(_fix(lat, lon, ts, tid, path, None))
    return groups


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _read_gpx(path) -> dict:
    try:
        root = ET.parse(path).getroot()
    except ET.ParseError as exc:
        raise DataFormatError(f"invalid XML: {exc}", path, exc.position[0]) from None
    groups: dict = {}
    n_trk = 0
    for trk in root.iter():
        if _local(trk.tag) != "trk":
            continue
        name = next((c.text for c in trk if _local(c.tag) == "name" and c.text), None)
        tid = (name or f"trk-{n_trk}").strip()
        n_trk += 1
        fixes = groups.setdefault(tid, [])
        for pt in trk.iter():
            if _local(pt.tag) != "trkpt":
                continue
            try:
                lat = float(pt.attrib["lat"])
                lon = float(pt.attrib["lon"])
            except (KeyError, ValueError):
                raise DataFormatError(
                    f"trkpt #{len(fixes)} of track {tid!r} lacks numeric lat/lon", path
                ) from None
            ts = None
            for child in pt:
                if _local(child.tag) == "time" and child.text:
                    try:
                        ts = parse_timestamp(child.text)
                    except ValueError:
                        raise DataFormatError(f"bad <time> {child.text!r} in track {tid!r}", path) from None
            fixes.append(_fix(lat, lon, ts, tid, path, None))
    return groups


_READERS = {"csv": _read_csv, "geojson": _read_geojson, "gpx": _read_gpx}


def read_fixes(path, format: Optional[str] = None) -> dict:
    """Raw fixes grouped by track id, in order of first appearance."""
    fmt = _check_format(format, path)
    try:
        groups = _READERS[fmt](path)
    except OSError as exc:
        raise DataFormatError(f"cannot read file: {exc.strerror}", path) from None
    if not groups:
        raise DataFormatError("file contains no track points", path)
    return groups


def fixes_to_tracks(groups: dict, origin: RawFix, path=None) -> list:
    tracks = []
    for tid, fixes in groups.items():
        stamps = [f.timestamp for f in fixes]
        have = [s is not None for s in stamps]
        if any(have) and not all(have):
            raise DataFormatError(f"track {tid!r} mixes rows with and without timestamps", path)
        try:
            tracks.append(
                Trajectory(tid, project_to_local(fixes, origin), stamps if all(have) else None)
            )
        except TrackFuseError as exc:
            raise DataFormatError(str(exc), path) from None
    return tracks


def first_fix(groups: dict) -> RawFix:
    return next(iter(groups.values()))[0]


def read_tracks(path, format: Optional[str] = None, origin: Optional[RawFix] = None) -> list:
    """Load a track file as planar :class:`Trajectory` objects.

    ``origin`` defaults to the first fix of the file.
    """
    groups = read_fixes(path, format)
    return fixes_to_tracks(groups, origin or first_fix(groups), path)


# ---------------------------------------------------------------------------
# writers


def _fmt_coord(v: float) -> str:
    return f"{v:.{COORD_DECIMALS}f}"


def _round(v: float) -> float:
    return round(float(v), COORD_DECIMALS)


def _records(tracks: Sequence[Trajectory], origin: RawFix):
    for t in tracks:
        lat, lon = local_to_geographic(t.points, origin)
        ts = t.timestamps if t.timestamps is not None else [None] * len(t)
        yield t.track_id, lat, lon, ts


def _write_csv(path, tracks, origin):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["track_id", "lat", "lon", "timestamp"])
        for tid, lat, lon, ts in _records(tracks, origin):
            for a, b, s in zip(lat, lon, ts):
                out.writerow([tid, _fmt_coord(a), _fmt_coord(b), "" if s is None else repr(float(s))])


def _write_geojson(path, tracks, origin):
    features = []
    for tid, lat, lon, ts in _records(tracks, origin):
        props = {"track_id": tid}
        if ts[0] is not None:
            props["timestamps"] = [float(s) for s in ts]
        features.append(
            {
                "type": "Feature",
                "properties": props,
                "geometry": {
                    "type": "LineString",
                    "coordinates": [[_round(b), _round(a)] for a, b in zip(lat, lon)],
                },
            }
        )
    doc = {"type": "FeatureCollection", "features": features}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def _iso(ts: float) -> str:
    return datetime.fromtimestamp(ts, tz=timezone.utc).isoformat().replace("+00:00", "Z")


def _write_gpx(path, tracks, origin):
    ET.register_namespace("", GPX_NS)
    root = ET.Element(f"{{{GPX_NS}}}gpx", {"version": "1.1", "creator": "trackfuse"})
    for tid, lat, lon, ts in _records(tracks, origin):
        trk = ET.SubElement(root, f"{{{GPX_NS}}}trk")
        ET.SubElement(trk, f"{{{GPX_NS}}}name").text = tid
        seg = ET.SubElement(trk, f"{{{GPX_NS}}}trkseg")
        for a, b, s in zip(lat, lon, ts):
            pt = ET.SubElement(seg, f"{{{GPX_NS}}}trkpt", {"lat": _fmt_coord(a), "lon": _fmt_coord(b)})
            if s is not None:
                ET.SubElement(pt, f"{{{GPX_NS}}}time").text = _iso(float(s))
    ET.indent(root)
    ET.ElementTree(root).write(path, encoding="utf-8", xml_declaration=True)


_WRITERS = {"csv": _write_csv, "geojson": _write_geojson, "gpx": _write_gpx}


def write_tracks(path, tracks: Sequence[Trajectory], origin: RawFix = DEFAULT_ORIGIN,
                 format: Optional[str] = None) -> None:
    fmt = _check_format(format, path)
    _WRITERS[fmt](path, list(tracks), origin)


def write_polyline(path, polyline: Polyline, format: Optional[str] = None,
                   origin: RawFix = DEFAULT_ORIGIN, name: str = "polyline") -> None:
    """Write a fused polyline as a single line feature (one CSV track, one GPX trk)."""
    fmt = _check_format(format, path)
    _WRITERS[fmt](path, [Trajectory(name, polyline.vertices)], origin)


def read_polyline(path, format: Optional[str] = None, origin: Optional[RawFix] = None) -> Polyline:
    """Read a polyline file; multiple tracks are concatenated in file order."""
    tracks = read_tracks(path, format, origin)
    return Polyline.from_points(np.concatenate([t.points for t in tracks]))
