"""Snap a scene onto the cell grid and check local triviality of the cover.

Cells are unit cubes in index units, u = (x - domain_min) / h; cell c has its
center at c + 0.5 and grid vertices sit at integers. Geometry is intersected
with a dual lattice shifted by a small generic offset ``DELTA`` so no cut ever
passes exactly through a cell center or a dual edge.

Codimension-2 elements are grid vertices in 2D and grid edges in 3D. A face
along axis a is stored at its lower cell L (between L and L + e_a).
"""

from __future__ import annotations

import hashlib
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from ..permgroup import Permutation
from .document import SceneError, check_scene

DELTA = np.array([1e-3 * math.sqrt(2.0), 1e-3 * math.sqrt(3.0), 1e-3 * math.sqrt(5.0)])

CLASSES = ("trivial", "frame-wetting-forced", "frame-wetting-optional", "wire", "inconsistent")
MARK_NONE, MARK_BOUNDARY, MARK_WIRE = 0, 1, 2


class RasterError(SceneError):
    """Rasterization failed (overlapping patches, broken S chain, geometry off-grid)."""


def _cyclic_axes(a, n):
    """The two axes spanning the plane normal to element axis a (2D: a is None)."""
    if n == 2:
        return 0, 1
    return (a + 1) % 3, (a + 2) % 3


@dataclass(frozen=True, eq=False)
class RasterScene:
    spec: object
    dims: tuple
    h: float
    degree: int
    dirichlet_sheet: int
    patch_ids: tuple
    patch_perms: tuple
    face_patch: tuple          # per axis int16 array over cells, -1 where uncrossed
    face_sign: tuple           # per axis int8 array, +1/-1 orientation vs +axis
    marks: tuple               # 2D: (vertex marks,), 3D: per element axis
    chains: tuple              # per curve: tuple of (element key, segment index)
    element_segments: dict = field(repr=False)
    raster_id: str = ""

    @property
    def n(self):
        return len(self.dims)

    @property
    def ncells(self):
        return int(np.prod(self.dims))

    @property
    def free(self):
        return np.ones(self.dims, dtype=bool)

    @property
    def collar(self):
        c = np.zeros(self.dims, dtype=bool)
        for a in range(self.n):
            idx = [slice(None)] * self.n
            idx[a] = 0
            c[tuple(idx)] = True
            idx[a] = -1
            c[tuple(idx)] = True
        return c

    def patch_perm_array(self):
        """(P, d) zero-based images of every patch permutation."""
        return np.array([[x - 1 for x in p.image] for p in self.patch_perms],
                        dtype=np.int64).reshape(len(self.patch_perms), self.degree)

    def transport(self, axis):
        """Zero-based sheet map for stepping +axis out of each cell, shape dims + (d,)."""
        d = self.degree
        out = np.broadcast_to(np.arange(d, dtype=np.int64), self.dims + (d,)).copy()
        fp, fs = self.face_patch[axis], self.face_sign[axis]
        if not self.patch_perms:
            return out
        fwd = self.patch_perm_array()
        inv = np.argsort(fwd, axis=1)
        sel = fp >= 0
        pos = sel & (fs > 0)
        neg = sel & (fs < 0)
        out[pos] = fwd[fp[pos]]
        out[neg] = inv[fp[neg]]
        return out

    def mark_of(self, key):
        if self.n == 2:
            return int(self.marks[0][key])
        a = key[0]
        return int(self.marks[a][tuple(key[1:])])

    def crossing(self, cell, nbr):
        """Permutation for stepping between two face-adjacent cells."""
        diff = [b - a for a, b in zip(cell, nbr)]
        if sorted(map(abs, diff)) != [0] * (self.n - 1) + [1]:
            raise ValueError(f"cells {cell} and {nbr} are not face-adjacent")
        axis = next(i for i, x in enumerate(diff) if x)
        lower = tuple(cell) if diff[axis] > 0 else tuple(nbr)
        pid = int(self.face_patch[axis][lower])
        if pid < 0:
            return Permutation.identity(self.degree)
        p = self.patch_perms[pid]
        if self.face_sign[axis][lower] < 0:
            p = p.inverse()
        return p if diff[axis] > 0 else p.inverse()


def element_name(key, n):
    if n == 2:
        return "v:%d,%d" % key
    return "e%s:%d,%d,%d" % ("xyz"[key[0]], *key[1:])


def _units(spec, p):
    return (np.asarray(p, dtype=float) - np.asarray(spec.domain_min)) / spec.grid_spacing


def _pierce_polyline(pts, dims):
    """Grid edges whose dual squares a 3D polyline pierces, in traversal order."""
    out = []
    for si in range(len(pts) - 1):
        q0, q1 = pts[si], pts[si + 1]
        hits = []
        for a in range(3):
            lo, hi = sorted((q0[a], q1[a]))
            m0 = math.ceil(lo - 0.5 - DELTA[a])
            m1 = math.floor(hi - 0.5 - DELTA[a])
            if q1[a] == q0[a]:
                continue
            for m in range(m0, m1 + 1):
                s = (m + 0.5 + DELTA[a] - q0[a]) / (q1[a] - q0[a])
                if not 0.0 <= s < 1.0:
                    continue
                q = q0 + s * (q1 - q0)
                v = [int(math.floor(q[b] - DELTA[b] + 0.5)) for b in range(3)]
                v[a] = m
                hits.append((s, (a,) + tuple(v)))
        hits.sort()
        out.extend((key, si) for _, key in hits)
    return out


def _edges_touch(k1, k2):
    def ends(k):
        a, v = k[0], np.array(k[1:])
        w = v.copy()
        w[a] += 1
        return {tuple(v), tuple(w)}
    return bool(ends(k1) & ends(k2))


def _polyline_faces(pts, dims):
    """Dual edges crossed by a 2D polyline: (axis, lower cell, sign)."""
    out = []
    for si in range(len(pts) - 1):
        p0, p1 = pts[si], pts[si + 1]
        t = p1 - p0
        normal = (t[1], -t[0])
        for a in range(2):
            b = 1 - a
            if p1[b] == p0[b] or normal[a] == 0:
                continue
            lo, hi = sorted((p0[b], p1[b]))
            for j in range(math.ceil(lo - 0.5 - DELTA[b]), math.floor(hi - 0.5 - DELTA[b]) + 1):
                s = (j + 0.5 + DELTA[b] - p0[b]) / (p1[b] - p0[b])
                if not 0.0 <= s < 1.0:
                    continue
                x = p0[a] + s * t[a]
                m = int(math.floor(x - 0.5 - DELTA[a]))
                cell = [0, 0]
                cell[a], cell[b] = m, j
                out.append((a, tuple(cell), 1 if normal[a] > 0 else -1))
    return out


def _triangle_faces(tri):
    """Dual edges crossed by a 3D triangle: (axis, lower cell, sign)."""
    p0, p1, p2 = tri
    nrm = np.cross(p1 - p0, p2 - p0)
    out = []
    for a in range(3):
        if abs(nrm[a]) < 1e-12:
            continue
        b, c = (a + 1) % 3, (a + 2) % 3
        P = np.array([[p[b], p[c]] for p in tri])
        jr = range(math.ceil(P[:, 0].min() - 0.5 - DELTA[b]), math.floor(P[:, 0].max() - 0.5 - DELTA[b]) + 1)
        kr = range(math.ceil(P[:, 1].min() - 0.5 - DELTA[c]), math.floor(P[:, 1].max() - 0.5 - DELTA[c]) + 1)
        if not len(jr) or not len(kr):
            continue
        J, K = np.meshgrid(np.array(jr), np.array(kr), indexing="ij")
        X = J + 0.5 + DELTA[b]
        Y = K + 0.5 + DELTA[c]
        signs = []
        for i in range(3):
            (x0, y0), (x1, y1) = P[i], P[(i + 1) % 3]
            signs.append((x1 - x0) * (Y - y0) - (y1 - y0) * (X - x0))
        s0, s1, s2 = signs
        inside = ((s0 > 0) & (s1 > 0) & (s2 > 0)) | ((s0 < 0) & (s1 < 0) & (s2 < 0))
        for j, k in zip(J[inside], K[inside]):
            xb, xc = j + 0.5 + DELTA[b], k + 0.5 + DELTA[c]
            xa = p0[a] - (nrm[b] * (xb - p0[b]) + nrm[c] * (xc - p0[c])) / nrm[a]
            m = int(math.floor(xa - 0.5 - DELTA[a]))
            cell = [0, 0, 0]
            cell[a], cell[b], cell[c] = m, int(j), int(k)
            out.append((a, tuple(cell), 1 if nrm[a] > 0 else -1))
    return out


def rasterize(spec):
    """Snap S, wires and cut patches of ``spec`` onto its grid."""
    check_scene(spec)
    n = spec.dimension
    dims = spec.grid_dims
    h = spec.grid_spacing

    crossings = {}
    for pi, patch in enumerate(spec.cut_patches):
        if n == 2:
            pts = [_units(spec, p) for p in patch.polyline]
            hits = _polyline_faces(pts, dims)
        else:
            hits = []
            for tri in patch.triangles:
                hits.extend(_triangle_faces([_units(spec, p) for p in tri]))
        for a, cell, sgn in hits:
            if not all(0 <= cell[i] < dims[i] for i in range(n)) or cell[a] >= dims[a] - 1:
                raise RasterError(f"patch {patch.id}: crossing outside the grid at {cell}")
            crossings.setdefault((a, cell), []).append((pi, sgn))

    face_patch = [np.full(dims, -1, dtype=np.int16) for _ in range(n)]
    face_sign = [np.zeros(dims, dtype=np.int8) for _ in range(n)]
    for (a, cell), lst in sorted(crossings.items()):
        net = {}
        for pi, sgn in lst:
            net[pi] = net.get(pi, 0) + sgn
        live = {pi: s for pi, s in net.items() if s}
        if not live:
            continue
        if len(live) > 1 or abs(next(iter(live.values()))) > 1:
            ids = sorted(spec.cut_patches[pi].id for pi in live)
            raise RasterError(f"overlapping patches {ids} on face axis={a} cell={cell}")
        pi, s = next(iter(live.items()))
        face_patch[a][cell] = pi
        face_sign[a][cell] = s

    if n == 2:
        marks = [np.zeros(tuple(x + 1 for x in dims), dtype=np.int8)]
    else:
        marks = []
        for a in range(3):
            shp = [x + 1 for x in dims]
            shp[a] = dims[a]
            marks.append(np.zeros(shp, dtype=np.int8))
    element_segments = {}
    chains = []
    for ci, curve in enumerate(spec.boundary_curves):
        role = MARK_BOUNDARY if curve.role == "boundary" else MARK_WIRE
        pts = [_units(spec, p) for p in curve.points]
        if n == 2:
            chain = []
            for si, p in enumerate(pts):
                key = tuple(int(math.floor(p[b] - DELTA[b] + 0.5)) for b in range(2))
                chain.append((key, si))
        else:
            chain = _pierce_polyline(pts, dims)
            for (k1, s1), (k2, s2) in zip(chain, chain[1:]):
                if not _edges_touch(k1, k2):
                    raise RasterError(f"curve {ci} segment {s2}: snapped chain is broken "
                                      f"between {element_name(k1, 3)} and {element_name(k2, 3)}")
            if curve.closed and chain and not _edges_touch(chain[-1][0], chain[0][0]):
                raise RasterError(f"curve {ci}: closed chain does not close after snapping")
        for key, si in chain:
            arr = marks[0] if n == 2 else marks[key[0]]
            idx = key if n == 2 else key[1:]
            prev = arr[idx]
            if prev and prev != role:
                raise RasterError(f"curve {ci}: element {element_name(key, n)} is both S and wire")
            arr[idx] = role
            element_segments.setdefault(key, []).append((ci, si))
        chains.append(tuple(chain))

    hsh = hashlib.sha1()
    hsh.update(repr((dims, h, spec.degree, spec.dirichlet_sheet,
                     [p.image for p in (q.permutation for q in spec.cut_patches)])).encode())
    for arr in face_patch + face_sign + marks:
        hsh.update(arr.tobytes())
    for arr in face_patch + face_sign + marks:
        arr.setflags(write=False)
    return RasterScene(
        spec=spec, dims=dims, h=h, degree=spec.degree, dirichlet_sheet=spec.dirichlet_sheet,
        patch_ids=tuple(p.id for p in spec.cut_patches),
        patch_perms=tuple(p.permutation for p in spec.cut_patches),
        face_patch=tuple(face_patch), face_sign=tuple(face_sign), marks=tuple(marks),
        chains=tuple(chains), element_segments=element_segments, raster_id=hsh.hexdigest()[:16])


def _compose_arr(p, q):
    """Left-to-right composition of stacked zero-based permutations."""
    return np.take_along_axis(q, p, axis=-1)


def _inv_arr(p):
    return np.argsort(p, axis=-1)


def element_monodromies(raster):
    """Elementary-loop monodromy of every interior codim-2 element.

    Yields (element axis or None, array of shape element-grid + (d,)) where the
    element grid is indexed by vertex coordinate minus one along the two loop
    axes. The loop runs counter-clockwise around the element axis.
    """
    n = raster.n
    T = [raster.transport(a) for a in range(n)]
    axes = [None] if n == 2 else [0, 1, 2]
    for ea in axes:
        b, c = _cyclic_axes(ea, n)
        lo = [slice(None)] * n
        lo[b] = slice(0, raster.dims[b] - 1)
        lo[c] = slice(0, raster.dims[c] - 1)
        ub = list(lo)
        ub[b] = slice(1, raster.dims[b])
        uc = list(lo)
        uc[c] = slice(1, raster.dims[c])
        step1 = T[b][tuple(lo)]
        step2 = T[c][tuple(ub)]
        step3 = _inv_arr(T[b][tuple(uc)])
        step4 = _inv_arr(T[c][tuple(lo)])
        m = _compose_arr(_compose_arr(_compose_arr(step1, step2), step3), step4)
        yield ea, m


def loop_start_cell(key, n):
    """First cell of the elementary loop around an element."""
    if n == 2:
        return (key[0] - 1, key[1] - 1)
    a, v = key[0], list(key[1:])
    b, c = _cyclic_axes(a, 3)
    v[b] -= 1
    v[c] -= 1
    return tuple(v)


def loop_cells(key, n):
    """The four cells of the elementary loop, in traversal order."""
    if n == 2:
        i, j = key
        return [(i - 1, j - 1), (i, j - 1), (i, j), (i - 1, j)]
    a, v = key[0], key[1:]
    b, c = _cyclic_axes(a, 3)
    out = []
    for db, dc in ((-1, -1), (0, -1), (0, 0), (-1, 0)):
        w = list(v)
        w[b] += db
        w[c] += dc
        out.append(tuple(w))
    return out


def reference_section(raster):
    """Sheet reached from the collar's Dirichlet sheet by a fewest-crossings path.

    0-1 breadth-first search; ties resolved by a fixed neighbor order, so the
    section is deterministic. Returns a 1-based int8 array over cells.
    """
    dims, n = raster.dims, raster.n
    ref = np.zeros(dims, dtype=np.int8)
    collar = raster.collar
    dq = deque()
    dist = np.full(dims, np.iinfo(np.int32).max, dtype=np.int64)
    for cell in zip(*np.nonzero(collar)):
        cell = tuple(int(x) for x in cell)
        dist[cell] = 0
        ref[cell] = raster.dirichlet_sheet
        dq.append(cell)
    fp = raster.face_patch
    while dq:
        cell = dq.popleft()
        for a in range(n):
            for step in (1, -1):
                nb = list(cell)
                nb[a] += step
                if not 0 <= nb[a] < dims[a]:
                    continue
                nb = tuple(nb)
                lower = cell if step > 0 else nb
                cost = 1 if fp[a][lower] >= 0 else 0
                nd = dist[cell] + cost
                if nd < dist[nb]:
                    dist[nb] = nd
                    ref[nb] = raster.crossing(cell, nb)(int(ref[cell])) if cost else ref[cell]
                    if cost:
                        dq.append(nb)
                    else:
                        dq.appendleft(nb)
    return ref


@dataclass(frozen=True)
class ElementRecord:
    element: str
    key: tuple
    permutation: Permutation
    classification: str
    role: str
    fixes_reference: bool


@dataclass
class ValidationReport:
    status: str
    records: list
    counts: dict
    warnings: list

    def by_class(self, cls):
        return [r for r in self.records if r.classification == cls]

    def record(self, key):
        for r in self.records:
            if r.key == tuple(key):
                return r
        return None

    def summary(self):
        lines = [f"status: {self.status}"]
        for k in CLASSES:
            lines.append(f"  {k}: {self.counts.get(k, 0)}")
        lines.extend(f"  warning: {w}" for w in self.warnings)
        return "\n".join(lines)

    def to_dict(self):
        return {
            "status": self.status,
            "counts": self.counts,
            "warnings": self.warnings,
            "records": [{"element": r.element, "permutation": str(r.permutation),
                         "classification": r.classification, "role": r.role,
                         "fixes_reference": r.fixes_reference}
                        for r in self.records if r.classification != "trivial"],
        }


def validate(raster):
    """Classify every codim-2 element by its elementary-loop monodromy.

    Records are kept for marked elements and for non-trivial unmarked ones;
    the remaining elements are only counted as trivial.
    """
    n, d = raster.n, raster.degree
    ident = np.arange(d)
    ref = None
    records, warnings = [], []
    counts = {k: 0 for k in CLASSES}
    for ea, mono in element_monodromies(raster):
        b, c = _cyclic_axes(ea, n)
        marks = raster.marks[0] if n == 2 else raster.marks[ea]
        sl = [slice(None)] * n
        sl[b] = slice(1, raster.dims[b])
        sl[c] = slice(1, raster.dims[c])
        mk = marks[tuple(sl)]
        nontriv = np.any(mono != ident, axis=-1)
        interesting = nontriv | (mk != MARK_NONE)
        counts["trivial"] += int(np.count_nonzero(~interesting))
        for idx in zip(*np.nonzero(interesting)):
            v = [int(x) for x in idx]
            v[b] += 1
            v[c] += 1
            key = tuple(v) if n == 2 else (ea,) + tuple(v)
            img = mono[idx]
            perm = Permutation(tuple(int(x) + 1 for x in img))
            role = {MARK_NONE: "none", MARK_BOUNDARY: "boundary", MARK_WIRE: "wire"}[int(mk[idx])]
            if ref is None:
                ref = reference_section(raster)
            s0 = int(ref[loop_start_cell(key, n)])
            fixes = perm(s0) == s0
            if role == "none":
                cls = "inconsistent"
            elif role == "wire":
                cls = "wire"
                if not fixes:
                    warnings.append(f"wire element {element_name(key, n)} monodromy {perm} "
                                    f"moves the Dirichlet sheet")
            elif not perm.fixed_points():
                cls = "frame-wetting-forced"
            else:
                cls = "frame-wetting-optional"
            counts[cls] += 1
            records.append(ElementRecord(element_name(key, n), key, perm, cls, role, fixes))
    records.sort(key=lambda r: (len(r.key), r.key))
    if counts["inconsistent"]:
        status = "fail"
    elif warnings:
        status = "warn"
    else:
        status = "pass"
    return ValidationReport(status, records, counts, warnings)
