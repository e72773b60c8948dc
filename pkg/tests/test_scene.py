import json

import numpy as np
import pytest

from plateau_cover.permgroup import Permutation
from plateau_cover.scene import (BUILTIN_NAMES, RasterError, SceneError, builtin_scene, parse_scene,
                                 rasterize, reference_section, relabel_sheets, scene_to_dict,
                                 serialize_scene, tiny_scenes, validate)


def two_point_doc(**over):
    doc = {
        "name": "pair", "dimension": 2, "domain": {"min": [0, 0], "max": [12, 12]},
        "grid_spacing": 1.0, "degree": 2, "dirichlet_sheet": 1,
        "boundary_curves": [{"role": "boundary", "points": [[3, 6]]},
                            {"role": "boundary", "points": [[9, 6]]}],
        "cut_patches": [{"id": "c", "permutation": [2, 1], "polyline": [[3, 6], [9, 6]]}],
    }
    doc.update(over)
    return doc


@pytest.mark.parametrize("name", BUILTIN_NAMES)
def test_builtin_round_trip(name):
    spec = builtin_scene(name)
    again = parse_scene(serialize_scene(spec))
    assert again == spec
    assert rasterize(again).raster_id == rasterize(spec).raster_id


def test_parse_minimal_document():
    spec = parse_scene(json.dumps(two_point_doc()))
    assert spec.grid_dims == (12, 12)
    assert spec.cut_patches[0].permutation == Permutation((2, 1))


@pytest.mark.parametrize("over, fragment", [
    ({"dirichlet_sheet": 3}, "dirichlet_sheet"),
    ({"degree": 1}, "degree"),
    ({"grid_spacing": 0.7}, "whole number"),
    ({"cut_patches": [{"id": "c", "permutation": [1, 1], "polyline": [[3, 6], [9, 6]]}]},
     "permutation"),
    ({"cut_patches": [{"id": "c", "permutation": [2, 1, 3], "polyline": [[3, 6], [9, 6]]}]},
     "degree"),
    ({"boundary_curves": [{"role": "boundary", "points": [[1, 6]]}]}, "collar"),
    ({"cut_patches": [{"id": "c", "permutation": [2, 1]}]}, "polyline"),
])
def test_schema_errors(over, fragment):
    with pytest.raises(SceneError, match=fragment):
        parse_scene(json.dumps(two_point_doc(**over)))


def test_missing_field_and_bad_json():
    doc = two_point_doc()
    del doc["domain"]
    with pytest.raises(SceneError, match="domain"):
        parse_scene(json.dumps(doc))
    with pytest.raises(SceneError, match="JSON"):
        parse_scene("{not json")


def test_incoherent_triangle_orientation_rejected():
    doc = scene_to_dict(builtin_scene("circle_3d", 16))
    tris = doc["cut_patches"][0]["triangles"]
    tris[0] = tris[0][::-1]
    with pytest.raises(SceneError, match="orient"):
        parse_scene(json.dumps(doc))


def test_straight_cut_crosses_one_face_per_cell():
    r = rasterize(builtin_scene("two_points_2d"))
    assert [int((fp >= 0).sum()) for fp in r.face_patch] == [0, 10]
    assert int((r.marks[0] > 0).sum()) == 2


def test_collar_is_outer_layer():
    r = rasterize(builtin_scene("two_points_2d", 16))
    assert r.collar.sum() == 16 * 16 - 14 * 14
    assert not r.collar[1:-1, 1:-1].any()


def test_overlapping_cuts_rejected():
    doc = two_point_doc(cut_patches=[
        {"id": "a", "permutation": [2, 1], "polyline": [[3, 6], [9, 6]]},
        {"id": "b", "permutation": [2, 1], "polyline": [[3, 6], [9, 6]]},
    ])
    with pytest.raises(RasterError):
        rasterize(parse_scene(json.dumps(doc)))


def test_rasterize_is_deterministic():
    a = rasterize(builtin_scene("almgren"))
    b = rasterize(builtin_scene("almgren"))
    assert a.raster_id == b.raster_id
    for x, y in zip(a.face_patch, b.face_patch):
        assert np.array_equal(x, y)


def test_two_points_validation():
    rep = validate(rasterize(builtin_scene("two_points_2d")))
    assert rep.status == "pass"
    assert rep.counts["frame-wetting-forced"] == 2
    assert all(str(r.permutation) == "(1 2)" for r in rep.records)


def test_steiner_junction_is_forced_and_ends_optional():
    rep = validate(rasterize(builtin_scene("steiner3_2d")))
    classes = sorted((str(r.permutation), r.classification) for r in rep.records)
    assert classes == [("(1 2 3)", "frame-wetting-forced"), ("(1 2)", "frame-wetting-optional"),
                       ("(1 3)", "frame-wetting-optional")]


def test_dangling_rim_is_inconsistent():
    doc = two_point_doc(cut_patches=[{"id": "c", "permutation": [2, 1],
                                      "polyline": [[3, 6], [7, 6]]}])
    rep = validate(rasterize(parse_scene(json.dumps(doc))))
    assert rep.status == "fail"
    bad = rep.by_class("inconsistent")
    assert [r.element for r in bad] == ["v:7,6"]


def test_wire_moving_dirichlet_sheet_warns():
    spec = next(s for s in tiny_scenes() if s.name == "tiny_d2_wire")
    rep = validate(rasterize(spec))
    assert rep.status == "warn"
    assert rep.counts["wire"] == 1


@pytest.mark.parametrize("name, forced, optional, wire", [
    ("cube_skeleton", 144, 0, 0),
    ("almgren", 0, 100, 24),
    ("circle_3d", 64, 0, 0),
])
def test_builtin_classification_counts(name, forced, optional, wire):
    rep = validate(rasterize(builtin_scene(name)))
    assert rep.counts["inconsistent"] == 0
    assert rep.counts["frame-wetting-forced"] == forced
    assert rep.counts["frame-wetting-optional"] == optional
    assert rep.counts["wire"] == wire


@pytest.mark.parametrize("name", BUILTIN_NAMES)
def test_builtins_validate(name):
    assert validate(rasterize(builtin_scene(name))).status in ("pass", "warn")


@pytest.mark.parametrize("name", ["steiner3_2d", "almgren", "moebius_retract", "octahedron_checker"])
def test_gauge_invariance_of_classification(name):
    spec = builtin_scene(name)
    base = validate(rasterize(spec))
    for g in (Permutation.from_cycles(3, "(1 2 3)"), Permutation.from_cycles(3, "(1 3)")):
        rep = validate(rasterize(relabel_sheets(spec, g)))
        assert [(r.element, r.classification) for r in rep.records] == \
               [(r.element, r.classification) for r in base.records]


def test_reference_section_respects_collar():
    r = rasterize(builtin_scene("almgren"))
    ref = reference_section(r)
    assert (ref[r.collar] == r.dirichlet_sheet).all()
    assert set(np.unique(ref)) <= {1, 2, 3}


def test_variants_share_the_frame():
    a = rasterize(builtin_scene("two_points_2d:above"))
    b = rasterize(builtin_scene("two_points_2d:below"))
    assert np.array_equal(a.marks[0], b.marks[0])
    assert not np.array_equal(a.face_patch[1], b.face_patch[1])


def test_unknown_builtin_and_small_grid():
    with pytest.raises(SceneError):
        builtin_scene("nope")
    with pytest.raises(SceneError):
        builtin_scene("circle_3d", 4)
