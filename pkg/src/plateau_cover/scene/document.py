"""Scene documents: typed problem instances and their JSON encoding."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from ..permgroup import GroupError, Permutation

ROLES = ("boundary", "invisible_wire")
COLLAR_CELLS = 2


class SceneError(ValueError):
    """Schema or geometry problem in a scene description."""


@dataclass(frozen=True)
class Curve:
    """Part of the frame S (role boundary) or an invisible wire.

    In 3D ``points`` is a polyline; a closed loop repeats its first point at
    the end. In 2D every point is its own codimension-2 element.
    """

    role: str
    points: tuple

    @property
    def closed(self):
        return len(self.points) > 2 and self.points[0] == self.points[-1]


@dataclass(frozen=True)
class CutPatchSpec:
    id: str
    permutation: Permutation
    triangles: tuple = None
    polyline: tuple = None


@dataclass(frozen=True)
class SceneSpec:
    name: str
    dimension: int
    domain_min: tuple
    domain_max: tuple
    grid_spacing: float
    degree: int
    dirichlet_sheet: int
    boundary_curves: tuple = ()
    cut_patches: tuple = ()
    notes: str = field(default="", compare=False)

    @property
    def grid_dims(self):
        return tuple(int(round((hi - lo) / self.grid_spacing))
                     for lo, hi in zip(self.domain_min, self.domain_max))

    def curves(self, role=None):
        return [c for c in self.boundary_curves if role is None or c.role == role]


def _point(p, dim, where):
    if not isinstance(p, (list, tuple)) or len(p) != dim:
        raise SceneError(f"{where}: expected a point with {dim} coordinates, got {p!r}")
    try:
        out = tuple(float(x) for x in p)
    except (TypeError, ValueError) as exc:
        raise SceneError(f"{where}: non-numeric coordinate in {p!r}") from exc
    if not all(math.isfinite(x) for x in out):
        raise SceneError(f"{where}: non-finite coordinate in {p!r}")
    return out


def _edge_key(p, q):
    r = lambda v: tuple(round(x, 9) for x in v)
    return r(p), r(q)


def check_orientation(triangles, patch_id):
    """Adjacent facets must traverse their shared edge in opposite directions."""
    seen = {}
    for t, tri in enumerate(triangles):
        for i in range(3):
            key = _edge_key(tri[i], tri[(i + 1) % 3])
            if key in seen:
                raise SceneError(
                    f"patch {patch_id}: facets {seen[key]} and {t} are inconsistently oriented")
            seen[key] = t


def check_scene(spec):
    """Raise SceneError unless every structural invariant holds."""
    if spec.dimension not in (2, 3):
        raise SceneError(f"dimension must be 2 or 3, got {spec.dimension}")
    if spec.degree < 2:
        raise SceneError(f"degree must be >= 2, got {spec.degree}")
    if not 1 <= spec.dirichlet_sheet <= spec.degree:
        raise SceneError(f"dirichlet_sheet {spec.dirichlet_sheet} outside 1..{spec.degree}")
    n = spec.dimension
    if len(spec.domain_min) != n or len(spec.domain_max) != n:
        raise SceneError("domain corners must match the dimension")
    h = spec.grid_spacing
    if not h > 0:
        raise SceneError("grid_spacing must be positive")
    for lo, hi in zip(spec.domain_min, spec.domain_max):
        cells = (hi - lo) / h
        if hi <= lo or abs(cells - round(cells)) > 1e-6 * max(1.0, cells):
            raise SceneError(f"domain extent {hi - lo} is not a whole number of cells of size {h}")
    lo_ok = [lo + COLLAR_CELLS * h - 1e-9 * h for lo in spec.domain_min]
    hi_ok = [hi - COLLAR_CELLS * h + 1e-9 * h for hi in spec.domain_max]

    def inside(p, where):
        for x, a, b in zip(p, lo_ok, hi_ok):
            if not a <= x <= b:
                raise SceneError(f"{where}: point {p} outside the domain box minus a "
                                 f"{COLLAR_CELLS}-cell collar")

    for ci, c in enumerate(spec.boundary_curves):
        if c.role not in ROLES:
            raise SceneError(f"curve {ci}: role must be one of {ROLES}, got {c.role!r}")
        if not c.points:
            raise SceneError(f"curve {ci}: no points")
        if n == 3 and len(c.points) < 2:
            raise SceneError(f"curve {ci}: a 3D polyline needs at least two points")
        for p in c.points:
            inside(p, f"curve {ci}")
    ids = set()
    for patch in spec.cut_patches:
        if patch.id in ids:
            raise SceneError(f"duplicate patch id {patch.id!r}")
        ids.add(patch.id)
        if patch.permutation.degree != spec.degree:
            raise SceneError(f"patch {patch.id}: permutation degree {patch.permutation.degree} "
                             f"does not match scene degree {spec.degree}")
        if n == 3:
            if not patch.triangles or patch.polyline is not None:
                raise SceneError(f"patch {patch.id}: 3D patches need triangles")
            for tri in patch.triangles:
                for p in tri:
                    inside(p, f"patch {patch.id}")
            check_orientation(patch.triangles, patch.id)
        else:
            if not patch.polyline or len(patch.polyline) < 2 or patch.triangles is not None:
                raise SceneError(f"patch {patch.id}: 2D patches need a polyline of >= 2 points")
            for p in patch.polyline:
                inside(p, f"patch {patch.id}")
    return spec


def _require(doc, key):
    if key not in doc:
        raise SceneError(f"missing required field {key!r}")
    return doc[key]


def scene_from_dict(doc):
    if not isinstance(doc, dict):
        raise SceneError("scene document must be a JSON object")
    try:
        dim = int(_require(doc, "dimension"))
        degree = int(_require(doc, "degree"))
        dom = _require(doc, "domain")
        dmin = _point(_require(dom, "min"), dim, "domain.min")
        dmax = _point(_require(dom, "max"), dim, "domain.max")
        h = float(_require(doc, "grid_spacing"))
        dsheet = int(_require(doc, "dirichlet_sheet"))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, SceneError):
            raise
        raise SceneError(f"bad scalar field: {exc}") from exc
    if dim not in (2, 3):
        raise SceneError(f"dimension must be 2 or 3, got {dim}")
    if degree < 2:
        raise SceneError(f"degree must be >= 2, got {degree}")
    curves = []
    for ci, c in enumerate(_require(doc, "boundary_curves")):
        pts = tuple(_point(p, dim, f"curve {ci}") for p in _require(c, "points"))
        curves.append(Curve(str(_require(c, "role")), pts))
    patches = []
    for pi, p in enumerate(_require(doc, "cut_patches")):
        pid = str(_require(p, "id"))
        raw = _require(p, "permutation")
        try:
            perm = Permutation(tuple(int(x) for x in raw))
        except (GroupError, TypeError, ValueError) as exc:
            raise SceneError(f"patch {pid}: bad permutation {raw!r}: {exc}") from exc
        tris = poly = None
        if "triangles" in p:
            tris = tuple(tuple(_point(v, dim, f"patch {pid}") for v in tri)
                         for tri in p["triangles"])
            if any(len(t) != 3 for t in tris):
                raise SceneError(f"patch {pid}: every triangle needs 3 vertices")
        if "polyline" in p:
            poly = tuple(_point(v, dim, f"patch {pid}") for v in p["polyline"])
        if tris is None and poly is None:
            raise SceneError(f"patch {pid}: needs 'triangles' or 'polyline'")
        patches.append(CutPatchSpec(pid, perm, tris, poly))
    spec = SceneSpec(str(doc.get("name", "unnamed")), dim, dmin, dmax, h, degree, dsheet,
                     tuple(curves), tuple(patches), str(doc.get("notes", "")))
    return check_scene(spec)


def parse_scene(text):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SceneError(f"not valid JSON: {exc}") from exc
    return scene_from_dict(doc)


def scene_to_dict(spec):
    patches = []
    for p in spec.cut_patches:
        d = {"id": p.id, "permutation": list(p.permutation.image)}
        if p.triangles is not None:
            d["triangles"] = [[list(v) for v in tri] for tri in p.triangles]
        if p.polyline is not None:
            d["polyline"] = [list(v) for v in p.polyline]
        patches.append(d)
    doc = {
        "name": spec.name,
        "dimension": spec.dimension,
        "domain": {"min": list(spec.domain_min), "max": list(spec.domain_max)},
        "grid_spacing": spec.grid_spacing,
        "degree": spec.degree,
        "dirichlet_sheet": spec.dirichlet_sheet,
        "boundary_curves": [{"role": c.role, "points": [list(p) for p in c.points]}
                            for c in spec.boundary_curves],
        "cut_patches": patches,
    }
    if spec.notes:
        doc["notes"] = spec.notes
    return doc


def serialize_scene(spec):
    return json.dumps(scene_to_dict(spec), indent=1)


def relabel_sheets(spec, g):
    """Gauge transform: conjugate every patch permutation by g and move the Dirichlet sheet."""
    from ..permgroup import conjugate
    from dataclasses import replace
    patches = tuple(replace(p, permutation=conjugate(p.permutation, g)) for p in spec.cut_patches)
    return replace(spec, cut_patches=patches, dirichlet_sheet=g(spec.dirichlet_sheet))
