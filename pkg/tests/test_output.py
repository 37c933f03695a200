from __future__ import annotations

import hashlib
import json
import math

import msgspec
import numpy as np
import pytest

from xychain.errors import ConfigurationError
from xychain.output import ArtifactWriter, Output, RunManifest, format_number, format_value


@pytest.mark.parametrize(
    "value, expected",
    [
        (1 / 3, "0.333333333333"),
        (0.0, "0"),
        (-0.0, "0"),
        (1310.0, "1310"),
        (2.5e-7, "2.5e-07"),
    ],
)
def test_format_number(value, expected):
    assert format_number(value) == expected


@pytest.mark.parametrize(
    "value, expected",
    [
        (True, "true"),
        (np.bool_(False), "false"),
        (np.int64(3), "3"),
        (np.float64(0.1), "0.1"),
        (None, ""),
        ("+-", "+-"),
    ],
)
def test_format_value(value, expected):
    assert format_value(value) == expected


def test_csv(tmp_path):
    writer = ArtifactWriter(tmp_path)
    path = writer.write_csv("table.csv", ["a", "b"], [[1, 1 / 3], [True, None]])
    assert path.read_text() == "a,b\n1,0.333333333333\ntrue,\n"


def test_csv_row_length_is_checked(tmp_path):
    with pytest.raises(ConfigurationError):
        ArtifactWriter(tmp_path).write_csv("table.csv", ["a", "b"], [[1]])


def test_json_is_sorted_and_rounded(tmp_path):
    writer = ArtifactWriter(tmp_path)
    path = writer.write_json(
        "data.json", {"b": 1 / 3, "a": [math.nan, np.float64(2.0)], "c": 1 + 2j}
    )
    text = path.read_text()
    assert text.index('"a"') < text.index('"b"') < text.index('"c"')
    assert json.loads(text) == {"a": [None, 2.0], "b": 0.333333333333, "c": {"im": 2.0, "re": 1.0}}


def test_exact_json_keeps_precision(tmp_path):
    path = ArtifactWriter(tmp_path).write_json("data.json", {"x": 1 / 3}, exact=True)
    assert json.loads(path.read_text())["x"] == 1 / 3


def test_digests_and_no_leftovers(tmp_path):
    writer = ArtifactWriter(tmp_path / "out")
    writer.write_text("a.txt", "alpha\n")
    writer.write_text("sub/b.txt", "beta\n")
    writer.write_text("a.txt", "gamma\n")

    assert sorted(p.name for p in (tmp_path / "out").rglob("*") if p.is_file()) == ["a.txt", "b.txt"]
    assert writer.digests == {
        "a.txt": hashlib.sha256(b"gamma\n").hexdigest(),
        "sub/b.txt": hashlib.sha256(b"beta\n").hexdigest(),
    }


@pytest.mark.parametrize("name", ["../escape.csv", "/tmp/absolute.csv", "."])
def test_paths_stay_inside_directory(tmp_path, name):
    with pytest.raises(ConfigurationError):
        ArtifactWriter(tmp_path / "out").path(name)


def test_gnuplot_script(tmp_path):
    path = ArtifactWriter(tmp_path).write_gnuplot("p.gp", "p.csv", ["time_s", "x", "y"])
    script = path.read_text()
    assert "set xlabel 'time_s'" in script
    assert "'p.csv' using 1:2 with lines" in script
    assert "'p.csv' using 1:3 with lines" in script


def test_manifest_verify(tmp_path):
    writer = ArtifactWriter(tmp_path)
    writer.write_text("a.txt", "alpha\n")
    writer.write_text("b.txt", "beta\n")
    manifest = RunManifest.build({"experiment": "modes"}, seed=3, wall_time=0.5, files=writer.digests)

    assert list(manifest.files) == ["a.txt", "b.txt"]
    assert set(manifest.versions) == {"xychain", "numpy", "scipy", "msgspec"}
    assert manifest.verify(tmp_path) == []

    (tmp_path / "b.txt").write_text("changed\n")
    assert manifest.verify(tmp_path) == ["b.txt"]


def test_manifest_round_trips(tmp_path):
    manifest = RunManifest.build({"seed": 1}, seed=1, wall_time=0.25, files={"a": "0" * 64})
    path = ArtifactWriter(tmp_path).write_json("manifest.json", manifest, exact=True)
    assert msgspec.json.decode(path.read_bytes(), type=RunManifest) == manifest


def test_summary_table(capsys):
    Output().color(False).summary("modes", {"modes": 3, "residual": 1e-15, "ok": True})
    out = capsys.readouterr().out
    assert "modes" in out
    assert "1e-15" in out
    assert "true" in out


def test_error_goes_to_stderr(capsys):
    Output().color(False).error("broken")
    captured = capsys.readouterr()
    assert captured.out == ""
    assert "Error: broken" in captured.err


def test_error_keeps_bracketed_text(capsys):
    Output().color(False).error("target alpha must lie in [chain], got 5")
    assert "Error: target alpha must lie in [chain], got 5" in capsys.readouterr().err
