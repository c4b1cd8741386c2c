"""End-to-end runs of the ``trackfuse`` command line."""

from __future__ import annotations

import csv
import hashlib
import json
import os
import subprocess
import sys
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from trackfuse.cli import main
from trackfuse.data import Trajectory, read_polyline, read_tracks, write_tracks
from trackfuse.data.projection import DEFAULT_ORIGIN
from trackfuse.geometry import lateral_distances

SVG = "{http://www.w3.org/2000/svg}"


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def digest(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


@pytest.fixture(scope="module")
def small_tracks(tmp_path_factory):
    out = tmp_path_factory.mktemp("small")
    assert main(["generate", "--tracks", "3", "--points", "60", "--seed", "7", "--out", str(out)]) == 0
    return out / "tracks.csv"


def planar_csv(path, tracks):
    write_tracks(path, tracks, DEFAULT_ORIGIN)
    return path


class TestGenerate:
    def test_default_scale(self, tmp_path):
        argv = ["generate", "--tracks", "10", "--points", "160", "--noise", "2.0", "--seed", "42"]
        assert main(argv + ["--out", str(tmp_path)]) == 0
        data = rows(tmp_path / "tracks.csv")
        assert len(data) == 1600
        assert len({r["track_id"] for r in data}) == 10
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["seed"] == 42
        assert manifest["tool"] == "trackfuse"
        assert manifest["schema_version"] == 1
        assert set(manifest["outputs"]) == {"tracks.csv", "truth.geojson"}
        assert manifest["outputs"]["tracks.csv"] == digest(tmp_path / "tracks.csv")

    def test_same_flags_same_hashes(self, tmp_path):
        for name in ("a", "b"):
            assert main(["generate", "--seed", "9", "--out", str(tmp_path / name)]) == 0
        for f in ("tracks.csv", "truth.geojson"):
            assert digest(tmp_path / "a" / f) == digest(tmp_path / "b" / f)

    def test_zero_noise_lies_on_truth(self, tmp_path):
        assert main(["generate", "--noise", "0", "--tracks", "2", "--out", str(tmp_path)]) == 0
        tracks = read_tracks(tmp_path / "tracks.csv", origin=DEFAULT_ORIGIN)
        truth = read_polyline(tmp_path / "truth.geojson", origin=DEFAULT_ORIGIN)
        P = np.concatenate([t.points for t in tracks])
        # 9 decimal degrees is ~0.1 mm
        assert lateral_distances(P, truth).max() < 1e-3

    @pytest.mark.parametrize("fmt", ["geojson", "gpx"])
    def test_other_formats(self, tmp_path, fmt):
        assert main(["generate", "--tracks", "2", "--points", "20", "--format", fmt, "--out", str(tmp_path)]) == 0
        assert len(read_tracks(tmp_path / f"tracks.{fmt}")) == 2

    def test_polyline_shape(self, tmp_path):
        argv = ["generate", "--shape", "polyline", "--vertices", "0,0;100,20;200,0", "--out", str(tmp_path)]
        assert main(argv) == 0

    def test_polyline_shape_needs_vertices(self, tmp_path, capsys):
        assert main(["generate", "--shape", "polyline", "--out", str(tmp_path)]) == 2
        assert "--vertices" in capsys.readouterr().err

    def test_bad_flag_exits_2(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(["generate", "--noise", "-1", "--out", str(tmp_path)])
        assert exc.value.code == 2


class TestFuse:
    def test_mda_report(self, tmp_path, small_tracks):
        argv = ["fuse", str(small_tracks), "--algo", "mda", "--error", "1.0", "--sigma", "3.0"]
        assert main(argv + ["--out", str(tmp_path)]) == 0
        (rep,) = rows(tmp_path / "report.csv")
        assert rep["algorithm"] == "MDA"
        assert float(rep["mean_error"]) <= 1.0
        assert int(rep["total_n"]) == 180
        assert float(rep["reduction_r"]) == int(rep["storage_i"]) / 180 * 100
        assert (tmp_path / "polyline_mda.geojson").exists()
        assert "runtime_t" in rows(tmp_path / "timing.csv")[0]

    @pytest.mark.parametrize("algo", ["mda", "ara", "dpa"])
    def test_colinear_toy(self, tmp_path, algo):
        x = np.linspace(0, 60, 25)
        tracks = [Trajectory("a", np.column_stack([x, 0.5 * x])), Trajectory("b", np.column_stack([x, 0.5 * x])[::2])]
        src = planar_csv(tmp_path / "line.csv", tracks)
        assert main(["fuse", str(src), "--algo", algo, "--out", str(tmp_path / "o")]) == 0
        (rep,) = rows(tmp_path / "o" / "report.csv")
        assert rep["storage_i"] == "2"

    def test_dpa_huge_epsilon(self, tmp_path, small_tracks):
        assert main(["fuse", str(small_tracks), "--algo", "dpa", "--epsilon", "1e9", "--out", str(tmp_path)]) == 0
        (rep,) = rows(tmp_path / "report.csv")
        assert rep["storage_i"] == "2"

    def test_algorithm_failure_exits_nonzero(self, tmp_path, small_tracks, capsys):
        code = main(["fuse", str(small_tracks), "--algo", "ara", "--block-width", "500", "--step", "500",
                     "--out", str(tmp_path)])
        assert code == 2
        assert "block width" in capsys.readouterr().err

    def test_missing_input_exits_3(self, tmp_path, capsys):
        assert main(["fuse", str(tmp_path / "nope.csv"), "--algo", "dpa", "--out", str(tmp_path)]) == 3
        assert "nope.csv" in capsys.readouterr().err

    def test_unwritable_output_exits_5(self, tmp_path, small_tracks):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        assert main(["fuse", str(small_tracks), "--algo", "dpa", "--out", str(blocker / "sub")]) == 5

    def test_filter_outliers(self, tmp_path, small_tracks):
        argv = ["fuse", str(small_tracks), "--algo", "dpa", "--filter-outliers", "--speed-cap", "30",
                "--out", str(tmp_path)]
        assert main(argv) == 0
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert "--filter-outliers" in manifest["argv"]


class TestCompare:
    def test_outputs(self, tmp_path, small_tracks, capsys):
        truth = small_tracks.parent / "truth.geojson"
        assert main(["compare", str(small_tracks), "--truth", str(truth), "--out", str(tmp_path)]) == 0
        printed = capsys.readouterr().out
        for algo in ("MDA", "ARA", "DPA"):
            assert algo in printed
            assert (tmp_path / f"polyline_{algo.lower()}.geojson").exists()
        report = rows(tmp_path / "report.csv")
        assert [r["algorithm"] for r in report] == ["ARA", "DPA", "MDA"]
        checks = {r["check"]: r["holds"] for r in rows(tmp_path / "checks.csv")}
        assert set(checks.values()) <= {"true", "false"}
        assert "runtime DPA < MDA" in checks
        sweep = rows(tmp_path / "dp_sweep.csv")
        counts = [int(r["storage_i"]) for r in sweep]
        assert counts == sorted(counts, reverse=True)

    def test_svg_layers(self, tmp_path, small_tracks):
        truth = small_tracks.parent / "truth.geojson"
        assert main(["compare", str(small_tracks), "--truth", str(truth), "--out", str(tmp_path)]) == 0
        root = ET.parse(tmp_path / "comparison.svg").getroot()
        layers = [g for g in root.iter(f"{SVG}g") if g.get("class") == "layer"]
        ids = sorted(g.get("id") for g in layers)
        assert ids == ["layer-ARA", "layer-DPA", "layer-MDA", "layer-raw", "layer-truth"]
        for g in layers:
            assert len(g.findall(f"{SVG}path")) == 1
        truth_path = next(g for g in layers if g.get("id") == "layer-truth").find(f"{SVG}path")
        assert truth_path.get("stroke-dasharray")
        strokes = {g.get("id"): g.find(f"{SVG}path").get("stroke") for g in layers}
        assert len({strokes[k] for k in ("layer-ARA", "layer-DPA", "layer-MDA")}) == 3

    def test_deterministic(self, tmp_path, small_tracks):
        for name in ("a", "b"):
            assert main(["compare", str(small_tracks), "--out", str(tmp_path / name)]) == 0
        for f in ("polyline_mda.geojson", "polyline_ara.geojson", "polyline_dpa.geojson",
                  "report.csv", "dp_sweep.csv", "comparison.svg"):
            assert digest(tmp_path / "a" / f) == digest(tmp_path / "b" / f)

    def test_two_points(self, tmp_path):
        src = planar_csv(tmp_path / "two.csv", [Trajectory("a", [(0.0, 0.0), (10.0, 4.0)])])
        assert main(["compare", str(src), "--out", str(tmp_path / "o")]) == 0
        assert [r["storage_i"] for r in rows(tmp_path / "o" / "report.csv")] == ["2", "2", "2"]

    def test_failure_reported_per_row(self, tmp_path, small_tracks, capsys):
        code = main(["compare", str(small_tracks), "--block-width", "500", "--step", "500",
                     "--out", str(tmp_path)])
        assert code == 4
        out = capsys.readouterr().out
        assert "FAILED    ARA" in out
        assert [r["algorithm"] for r in rows(tmp_path / "report.csv")] == ["DPA", "MDA"]


class TestEval:
    def test_raw_points_as_polyline(self, tmp_path):
        rng = np.random.default_rng(1)
        src = planar_csv(tmp_path / "p.csv", [Trajectory("a", np.cumsum(rng.uniform(1, 3, size=(40, 2)), axis=0))])
        assert main(["eval", str(src), str(src), "--out", str(tmp_path / "o")]) == 0
        (rep,) = rows(tmp_path / "o" / "report.csv")
        assert float(rep["reduction_r"]) == 100.0
        assert float(rep["mean_error"]) == 0.0

    def test_matches_fuse_report(self, tmp_path, small_tracks):
        assert main(["fuse", str(small_tracks), "--algo", "ara", "--out", str(tmp_path / "f")]) == 0
        poly = tmp_path / "f" / "polyline_ara.geojson"
        assert main(["eval", str(small_tracks), str(poly), "--out", str(tmp_path / "e")]) == 0
        (a,) = rows(tmp_path / "f" / "report.csv")
        (b,) = rows(tmp_path / "e" / "report.csv")
        a.pop("algorithm"), b.pop("algorithm")
        assert a == b

    def test_no_files_without_out(self, tmp_path, small_tracks, capsys, monkeypatch):
        monkeypatch.chdir(tmp_path)
        assert main(["eval", str(small_tracks), str(small_tracks.parent / "truth.geojson")]) == 0
        assert "mean error" in capsys.readouterr().out
        assert os.listdir(tmp_path) == []


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "trackfuse", "--version"], capture_output=True, text=True)
    assert out.returncode == 0
    assert out.stdout.startswith("trackfuse ")
