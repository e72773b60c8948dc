import json

import numpy as np
import pytest

from plateau_cover.cover import build_cover
from plateau_cover.functional import JumpSet, Labeling, jump_set
from plateau_cover.measure import (MeasureError, area, export_obj, obj_text, read_obj,
                                   report_json, wetting_report)
from plateau_cover.scene import builtin_scene, rasterize
from plateau_cover.solve import solve


@pytest.fixture(scope="module")
def pair():
    r = rasterize(builtin_scene("two_points_2d"))
    c = build_cover(r)
    return r, c, solve(r, c, "plain", "mincut")


def strip_3d(raster, length=10):
    """Axis-2 faces above cells (5..5+length-1, 5, 5)."""
    cells = [(x, 5, 5) for x in range(5, 5 + length)]
    i = np.array([np.ravel_multi_index(c, raster.dims) for c in cells], dtype=np.int64)
    j = i + 1
    kind = np.full(len(cells), 2)
    w = np.full(len(cells), 1 << 16, dtype=np.int64)
    return JumpSet(i, j, kind, w, raster.h ** 2 / (1 << 16), raster.dims, raster.h)


def test_empty_jump(tmp_path):
    r = rasterize(builtin_scene("circle_3d", 16))
    c = build_cover(r)
    empty = strip_3d(r, 0)
    assert area(empty) == 0
    export_obj(empty, r, tmp_path / "e.obj")
    m = read_obj(tmp_path / "e.obj")
    assert m.faces == [] and m.header_area == 0.0
    assert len(jump_set(Labeling.constant(r), c)) > 0


def test_strip_export_shares_vertices(tmp_path):
    r = rasterize(builtin_scene("circle_3d", 16))
    js = strip_3d(r)
    export_obj(js, r, tmp_path / "s.obj")
    m = read_obj(tmp_path / "s.obj")
    assert len(m.faces) == 10
    assert all(len(f) == 4 for f in m.faces)
    assert len(m.vertices) == 22
    assert m.geometric_area() == pytest.approx(10 * r.h ** 2, rel=1e-12)


def test_export_is_deterministic(tmp_path, pair):
    r, c, res = pair
    js = jump_set(res.labeling, c)
    export_obj(js, r, tmp_path / "a.obj")
    export_obj(js, r, tmp_path / "b.obj")
    assert (tmp_path / "a.obj").read_bytes() == (tmp_path / "b.obj").read_bytes()


def test_round_trip_face_count_and_area(tmp_path):
    r = rasterize(builtin_scene("circle_3d"))
    c = build_cover(r)
    for w in ("plain", "crofton"):
        js = jump_set(Labeling.constant(r), c, w)
        export_obj(js, r, tmp_path / f"{w}.obj")
        m = read_obj(tmp_path / f"{w}.obj")
        assert len(m.faces) == len(js.faces())
        assert m.header_area == js.area()
    plain = jump_set(Labeling.constant(r), c, "plain")
    assert read_obj(tmp_path / "plain.obj").geometric_area() == pytest.approx(plain.area(), rel=1e-12)


def test_2d_export_uses_line_records(pair):
    r, c, res = pair
    text = obj_text(jump_set(res.labeling, c), r)
    assert "# faces 10" in text
    assert sum(line.startswith("l ") for line in text.splitlines()) == 10
    assert sum(line.startswith("v ") for line in text.splitlines()) == 11


def test_area_checks_labeling(pair):
    r, c, res = pair
    js = jump_set(res.labeling, c)
    assert area(js, res.labeling, c) == pytest.approx(10 * r.h)
    other = jump_set(res.labeling, c, "crofton")
    with pytest.raises(MeasureError):
        area(other, res.labeling, c, "plain")


def test_two_points_are_wetted(pair):
    r, c, res = pair
    rep = wetting_report(jump_set(res.labeling, c), r)
    assert len(rep.segments) == 2
    assert all(s.wetted and s.max_distance == 0 for s in rep.segments)
    assert {s.monodromy_class for s in rep.segments} == {"frame-wetting-forced"}


def test_unwetted_distance_grows():
    r = rasterize(builtin_scene("two_points_2d"))
    c = build_cover(r)
    empty = JumpSet(np.array([], int), np.array([], int), np.array([], int),
                    np.array([], np.int64), 1.0, r.dims, r.h)
    rep = wetting_report(empty, r)
    assert not any(s.wetted for s in rep.segments)
    # one face three cells right of the right point
    cell = (23, 15)
    one = JumpSet(np.array([np.ravel_multi_index(cell, r.dims)]), np.array([0]), np.array([1]),
                  np.array([1], np.int64), 1.0, r.dims, r.h)
    rep = wetting_report(one, r)
    right = max(rep.segments, key=lambda s: s.segment)
    assert not right.wetted and right.min_distance == 3


def test_report_json_round_trip(tmp_path, pair):
    r, c, res = pair
    wet = wetting_report(jump_set(res.labeling, c), r)
    path = report_json(res, wet, tmp_path / "r.json", r, {"seed": 0})
    doc = json.loads(path.read_text())
    for key in ("scene", "grid", "weighting", "solver", "certificate", "energy", "tv", "area",
                "wetting", "seed", "wallclock"):
        assert key in doc
    assert doc["tv"] == 2 * doc["energy"]
    assert doc["energy"] == res.energy
    assert doc["energy_int"] == res.energy_int
    assert doc["grid"] == [32, 32]
    assert [w["wetted"] for w in doc["wetting"]] == [s.wetted for s in wet.segments]


def test_report_to_missing_directory(tmp_path, pair):
    r, c, res = pair
    target = tmp_path / "nope" / "r.json"
    with pytest.raises(OSError, match="nope"):
        report_json(res, None, target, r)
