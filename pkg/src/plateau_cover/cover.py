"""Discrete cover of the gridded domain minus the frame.

Node (cell, sheet) has id ``flat_cell * d + (sheet - 1)``. Stepping from cell
c to c + e_a on sheet s lands on sheet T_a[c](s); T_a is the signed patch
permutation of the face, or the identity on uncrossed faces.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .permgroup import Permutation, compose
from .scene.raster import validate


class CoverError(ValueError):
    pass


@dataclass(frozen=True)
class BasePath:
    cells: tuple
    closed: bool = False

    def __post_init__(self):
        cells = tuple(tuple(int(x) for x in c) for c in self.cells)
        if self.closed and len(cells) > 1 and cells[0] == cells[-1]:
            cells = cells[:-1]
        object.__setattr__(self, "cells", cells)

    def steps(self):
        """Consecutive cell pairs; stationary steps (a repeated cell) are skipped."""
        seq = list(self.cells)
        if self.closed:
            seq.append(seq[0])
        return [(a, b) for a, b in zip(seq, seq[1:]) if a != b]

    def concat(self, other):
        """Concatenate two closed loops sharing their first cell."""
        if not (self.closed and other.closed) or self.cells[0] != other.cells[0]:
            raise CoverError("concatenation needs two closed loops at one basepoint")
        return BasePath(self.cells + other.cells, closed=True)


@dataclass(frozen=True, eq=False)
class CoverGraph:
    raster: object
    degree: int
    transports: tuple
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def dims(self):
        return self.raster.dims

    @property
    def n_nodes(self):
        return self.raster.ncells * self.degree

    def node(self, cell, sheet):
        return int(np.ravel_multi_index(tuple(cell), self.dims)) * self.degree + sheet - 1

    def node_cell(self, node):
        flat, s = divmod(int(node), self.degree)
        return tuple(int(x) for x in np.unravel_index(flat, self.dims)), s + 1

    def fiber(self, cell):
        base = int(np.ravel_multi_index(tuple(cell), self.dims)) * self.degree
        return list(range(base, base + self.degree))

    def base_edges(self):
        """Face-adjacent cell pairs (flat ids, lower first), axis by axis."""
        idx = np.arange(self.raster.ncells).reshape(self.dims)
        us, vs = [], []
        for a in range(self.raster.n):
            lo = [slice(None)] * self.raster.n
            hi = [slice(None)] * self.raster.n
            lo[a] = slice(0, self.dims[a] - 1)
            hi[a] = slice(1, self.dims[a])
            us.append(idx[tuple(lo)].ravel())
            vs.append(idx[tuple(hi)].ravel())
        return np.concatenate(us), np.concatenate(vs)

    def edges(self):
        """Cover edges (node, node): d per base adjacency."""
        d = self.degree
        us, vs = [], []
        for a in range(self.raster.n):
            lo = [slice(None)] * self.raster.n
            lo[a] = slice(0, self.dims[a] - 1)
            idx = np.arange(self.raster.ncells).reshape(self.dims)
            src = idx[tuple(lo)].ravel()
            step = int(np.prod(self.dims[a + 1:]))
            dst = src + step
            T = self.transports[a][tuple(lo)].reshape(-1, d)
            for s in range(d):
                us.append(src * d + s)
                vs.append(dst * d + T[:, s])
        return np.concatenate(us), np.concatenate(vs)

    def step_sheet(self, cell, nbr, sheet):
        return self.raster.crossing(cell, nbr)(sheet)

    def lift_path(self, cells, start_sheet):
        sheets = [start_sheet]
        for a, b in zip(cells, cells[1:]):
            sheets.append(self.step_sheet(a, b, sheets[-1]))
        return sheets


def build_cover(raster, report=None):
    report = report or validate(raster)
    if report.status == "fail":
        bad = report.by_class("inconsistent")[:3]
        raise CoverError("validation failed; non-trivial monodromy off the frame at "
                         + ", ".join(r.element for r in bad))
    transports = tuple(raster.transport(a) for a in range(raster.n))
    for t in transports:
        t.setflags(write=False)
    return CoverGraph(raster, raster.degree, transports)


def _check_path(raster, path):
    for c in path.cells:
        if len(c) != raster.n or not all(0 <= c[i] < raster.dims[i] for i in range(raster.n)):
            raise CoverError(f"cell {c} outside the grid")
    for a, b in path.steps():
        if sum(abs(x - y) for x, y in zip(a, b)) != 1:
            raise CoverError(f"cells {a} and {b} are not face-adjacent")


def path_monodromy(raster, path):
    if not path.closed:
        raise CoverError("monodromy needs a closed path")
    _check_path(raster, path)
    out = Permutation.identity(raster.degree)
    for a, b in path.steps():
        out = compose(out, raster.crossing(a, b))
    return out


def _crossed(raster, a, b, family):
    diff = [y - x for x, y in zip(a, b)]
    axis = next(i for i, x in enumerate(diff) if x)
    lower = a if diff[axis] > 0 else b
    pid = int(raster.face_patch[axis][lower])
    return pid >= 0 and pid in family


def default_family(raster):
    return {i for i, p in enumerate(raster.patch_perms) if not p.is_identity()}


def link2(raster, loop, family=None):
    """Parity of crossings of a closed cell loop with a designated cut family.

    ``family`` is a set of patch indices; by default every non-identity patch
    of a degree-2 scene. A loop of face-adjacent cells never meets the frame,
    which lives on codimension-2 elements.
    """
    if not loop.closed:
        raise CoverError("link2 needs a closed loop")
    _check_path(raster, loop)
    if family is None:
        if raster.degree != 2:
            raise CoverError("degree > 2: pass an explicit cut family")
        family = default_family(raster)
    return sum(_crossed(raster, a, b, family) for a, b in loop.steps()) % 2


def _same_frame(ra, rb):
    if ra.dims != rb.dims or ra.degree != rb.degree:
        raise CoverError("rasters differ in grid or degree")
    if any(not np.array_equal(x, y) for x, y in zip(ra.marks, rb.marks)):
        raise CoverError("rasters do not share the same frame S")


def _crossing_masks(raster):
    ids = np.array([not p.is_identity() for p in raster.patch_perms] + [False])
    return [ids[np.where(fp >= 0, fp, len(ids) - 1)] for fp in raster.face_patch]


def parity_region(raster_s, raster_g, basepoint, order="bfs"):
    """h(x) = parity of crossings of both cuts along any path from the basepoint.

    ``order`` picks the traversal (breadth-first, or depth-first with reversed
    neighbor order); a disagreement between two routes raises CoverError.
    """
    _same_frame(raster_s, raster_g)
    dims, n = raster_s.dims, raster_s.n
    basepoint = tuple(basepoint)
    if not all(0 <= basepoint[i] < dims[i] for i in range(n)):
        raise CoverError(f"basepoint {basepoint} outside the grid")
    ms, mg = _crossing_masks(raster_s), _crossing_masks(raster_g)
    flip = [a ^ b for a, b in zip(ms, mg)]
    h = np.full(dims, -1, dtype=np.int8)
    h[basepoint] = 0
    moves = [(a, s) for a in range(n) for s in (1, -1)]
    if order != "bfs":
        moves = moves[::-1]
    todo = deque([basepoint])
    while todo:
        cell = todo.popleft() if order == "bfs" else todo.pop()
        for a, s in moves:
            nb = list(cell)
            nb[a] += s
            if not 0 <= nb[a] < dims[a]:
                continue
            nb = tuple(nb)
            lower = cell if s > 0 else nb
            val = h[cell] ^ int(flip[a][lower])
            if h[nb] < 0:
                h[nb] = val
                todo.append(nb)
            elif h[nb] != val:
                raise CoverError(f"parity is not well defined at {nb}; the cuts do not "
                                 "bound the same frame")
    return h.astype(np.uint8)


def exterior_region(raster_a, raster_b):
    """Cells reachable from the collar without crossing either cut."""
    _same_frame(raster_a, raster_b)
    ma, mb = _crossing_masks(raster_a), _crossing_masks(raster_b)
    dims, n = raster_a.dims, raster_a.n
    seen = raster_a.collar.copy()
    todo = deque(tuple(int(x) for x in c) for c in zip(*np.nonzero(seen)))
    while todo:
        cell = todo.popleft()
        for a in range(n):
            for s in (1, -1):
                nb = list(cell)
                nb[a] += s
                if not 0 <= nb[a] < dims[a]:
                    continue
                nb = tuple(nb)
                lower = cell if s > 0 else nb
                if seen[nb] or ma[a][lower] or mb[a][lower]:
                    continue
                seen[nb] = True
                todo.append(nb)
    return seen


def transport_labeling(labeling, raster_s, raster_g):
    """Carry a degree-2 labeling from the cover cut along one cut to another."""
    from .functional import Labeling
    if raster_s.degree != 2 or raster_g.degree != 2:
        raise CoverError("labeling transport is defined for degree 2 only")
    if labeling.raster_id != raster_s.raster_id:
        raise CoverError("labeling does not belong to the source raster")
    h = parity_region(raster_s, raster_g, (0,) * raster_s.n)
    sheet = np.where(h == 0, labeling.sheet, 3 - labeling.sheet).astype(np.int8)
    return Labeling.create(raster_g, sheet)
