"""Area, wetting and export of the computed film."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .scene.raster import _cyclic_axes, validate


class MeasureError(ValueError):
    pass


def area(jump, labeling=None, cover=None, weighting="plain"):
    """Weighted measure of the jump set; checked against TV/2 when a labeling is given."""
    if labeling is not None:
        from .functional import energy_int
        if cover is None:
            raise MeasureError("checking against a labeling needs its cover")
        if energy_int(labeling, cover, weighting) != jump.area_int():
            raise MeasureError("TV of the labeling differs from twice the jump area")
    return jump.area()


def ring_faces(key, n):
    """Grid faces (axis, lower cell) around a codim-2 element."""
    if n == 2:
        i, j = key
        return [(0, (i - 1, j - 1)), (0, (i - 1, j)), (1, (i - 1, j - 1)), (1, (i, j - 1))]
    a, v = key[0], key[1:]
    b, c = _cyclic_axes(a, n)
    out = []
    for ax, other in ((b, c), (c, b)):
        for off in (-1, 0):
            cell = list(v)
            cell[ax] -= 1
            cell[other] += off
            out.append((ax, tuple(cell)))
    return out


def ring_cells(key, n):
    if n == 2:
        i, j = key
        return [(i - 1, j - 1), (i, j - 1), (i - 1, j), (i, j)]
    a, v = key[0], key[1:]
    b, c = _cyclic_axes(a, n)
    out = []
    for db in (-1, 0):
        for dc in (-1, 0):
            cell = list(v)
            cell[b] += db
            cell[c] += dc
            out.append(tuple(cell))
    return out


@dataclass
class SegmentWetting:
    curve: int
    segment: int
    role: str
    monodromy_class: str
    elements: int
    wetted_elements: int
    wetted: bool
    min_distance: int
    max_distance: int

    @property
    def segment_id(self):
        return f"{self.curve}:{self.segment}"


@dataclass
class WettingReport:
    segments: list

    def segment(self, curve, seg):
        for s in self.segments:
            if (s.curve, s.segment) == (curve, seg):
                return s
        raise KeyError((curve, seg))

    def curve_wetted(self, curve):
        return all(s.wetted for s in self.segments if s.curve == curve)

    def to_list(self):
        return [dict(asdict(s), segment_id=s.segment_id) for s in self.segments]


def _element_distances(jump, raster):
    """Per S element: 0 if a jump face lies in its ring, else 1 + chessboard
    distance (cells) from the ring to the nearest cell bordering a jump face."""
    n, dims = raster.n, raster.dims
    masks = [jump.face_mask(a) for a in range(n)]
    touched = np.zeros(dims, dtype=bool)
    for a, m in enumerate(masks):
        touched |= m
        hi = np.zeros(dims, dtype=bool)
        sl_lo = [slice(None)] * n
        sl_hi = [slice(None)] * n
        sl_lo[a] = slice(0, dims[a] - 1)
        sl_hi[a] = slice(1, dims[a])
        hi[tuple(sl_hi)] = m[tuple(sl_lo)]
        touched |= hi
    if touched.any():
        dt = ndimage.distance_transform_cdt(~touched, metric="chessboard")
    else:
        dt = np.full(dims, np.iinfo(np.int32).max // 2)
    out = {}
    for key in raster.element_segments:
        if any(masks[ax][cell] for ax, cell in ring_faces(key, n)):
            out[key] = 0
        else:
            out[key] = 1 + int(min(dt[c] for c in ring_cells(key, n)))
    return out


def wetting_report(jump, raster, report=None):
    """A segment is wetted when every one of its elements has a jump face in its ring."""
    report = report or validate(raster)
    dist = _element_distances(jump, raster)
    cls = {r.key: r.classification for r in report.records}
    segs = {}
    for ci, chain in enumerate(raster.chains):
        for key, si in chain:
            segs.setdefault((ci, si), []).append(key)
    out = []
    for (ci, si), keys in sorted(segs.items()):
        ds = [dist[k] for k in keys]
        kinds = sorted({cls.get(k, "trivial") for k in keys})
        out.append(SegmentWetting(
            curve=ci, segment=si, role=raster.spec.boundary_curves[ci].role,
            monodromy_class="/".join(kinds), elements=len(keys),
            wetted_elements=sum(d == 0 for d in ds), wetted=max(ds) == 0,
            min_distance=min(ds), max_distance=max(ds)))
    return WettingReport(out)


def _face_vertices(axis, cell, n):
    """Corner vertices (index units) of a face, counter-clockwise in its plane."""
    base = list(cell)
    base[axis] += 1
    if n == 2:
        o = 1 - axis
        v1 = list(base)
        v1[o] += 1
        return [tuple(base), tuple(v1)]
    b, c = _cyclic_axes(axis, n)
    corners = []
    for db, dc in ((0, 0), (1, 0), (1, 1), (0, 1)):
        v = list(base)
        v[b] += db
        v[c] += dc
        corners.append(tuple(v))
    return corners


def _fmt(x):
    return repr(float(x))


def obj_text(jump, raster):
    n = raster.n
    lo = raster.spec.domain_min
    h = raster.h
    vid = {}
    faces = []
    for f in jump.faces():
        ids = []
        for v in _face_vertices(f[0], f[1:], n):
            if v not in vid:
                vid[v] = len(vid) + 1
            ids.append(vid[v])
        faces.append(ids)
    lines = [f"# plateau-cover film, scene {raster.spec.name}",
             f"# faces {len(faces)}", f"# area {_fmt(jump.area())}"]
    for v in vid:
        xyz = [lo[k] + v[k] * h for k in range(n)] + [0.0] * (3 - n)
        lines.append("v " + " ".join(_fmt(x) for x in xyz))
    tag = "l" if n == 2 else "f"
    lines.extend(f"{tag} " + " ".join(map(str, ids)) for ids in faces)
    return "\n".join(lines) + "\n"


def export_obj(jump, raster, path):
    """Write one quad (3D) or line record (2D) per jump face; vertices deduplicated."""
    path = Path(path)
    try:
        path.write_text(obj_text(jump, raster), encoding="utf-8")
    except OSError as e:
        raise OSError(f"cannot write OBJ to {path}: {e.strerror}") from e
    return path


@dataclass
class ObjMesh:
    vertices: np.ndarray
    faces: list
    header_area: float | None

    def geometric_area(self):
        tot = 0.0
        for f in self.faces:
            p = self.vertices[[i - 1 for i in f]]
            if len(f) == 2:
                tot += float(np.linalg.norm(p[1] - p[0]))
            else:
                tot += 0.5 * float(np.linalg.norm(np.cross(p[2] - p[0], p[3] - p[1])))
        return tot


def read_obj(path):
    verts, faces, a = [], [], None
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "v":
            verts.append([float(x) for x in parts[1:4]])
        elif parts[0] in ("f", "l"):
            faces.append([int(x.split("/")[0]) for x in parts[1:]])
        elif parts[:2] == ["#", "area"]:
            a = float(parts[2])
    return ObjMesh(np.array(verts, dtype=float).reshape(-1, 3), faces, a)


def report_dict(result, wetting=None, raster=None, config=None):
    d = {
        "scene": raster.spec.name if raster is not None else None,
        "grid": list(raster.dims) if raster is not None else None,
        "weighting": result.weighting,
        "solver": result.solver,
        "certificate": result.certificate,
        "energy": result.energy,
        "energy_int": int(result.energy_int),
        "tv": result.tv,
        "area": result.energy,
        "wetting": wetting.to_list() if wetting is not None else [],
        "seed": int(result.seed),
        "wallclock": result.wallclock,
    }
    if config is not None:
        d["config"] = config
    if d["tv"] != 2 * d["energy"]:
        raise MeasureError("tv must equal twice the energy")
    return d


def report_json(result, wetting, path, raster=None, config=None):
    path = Path(path)
    text = json.dumps(report_dict(result, wetting, raster, config), indent=2, sort_keys=True)
    try:
        path.write_text(text + "\n", encoding="utf-8")
    except OSError as e:
        raise OSError(f"cannot write report to {path}: {e.strerror}") from e
    return path


__all__ = ["MeasureError", "area", "ring_faces", "ring_cells", "SegmentWetting", "WettingReport",
           "wetting_report", "obj_text", "export_obj", "ObjMesh", "read_obj", "report_dict",
           "report_json"]
