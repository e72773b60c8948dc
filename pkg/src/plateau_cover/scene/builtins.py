"""Built-in scenes.

All built-ins live in the box [-1, 1]^n with N cells per axis (h = 2 / N).
Geometry is authored in cell units for a default N and rescaled for other
grid sizes. Coordinates of wires, ribbons and the Moebius band are our own
choices; only the permutation schemes and group data follow the worked
examples of the covering construction.
"""

from __future__ import annotations

import math

import numpy as np

from ..permgroup import Homomorphism, Permutation, Presentation, Word
from .document import Curve, CutPatchSpec, SceneError, SceneSpec, check_scene, check_orientation

BUILTIN_NAMES = ("two_points_2d", "steiner3_2d", "circle_3d", "cube_skeleton", "almgren",
                 "moebius_retract", "octahedron_checker", "octahedron_diametral")
DEFAULT_GRID = {"two_points_2d": 32, "steiner3_2d": 32, "circle_3d": 32, "cube_skeleton": 24,
                "almgren": 24, "moebius_retract": 24, "octahedron_checker": 24,
                "octahedron_diametral": 24}


def _cyc(d, text):
    return Permutation.from_cycles(d, text)


class _Frame:
    """Converts cell units to box coordinates for an N-cell grid on [-1, 1]^n."""

    def __init__(self, n, N):
        self.n, self.N = n, N
        self.h = 2.0 / N

    def p(self, *u):
        return tuple(-1.0 + float(x) * self.h for x in u)

    def scene(self, name, d, curves, patches, dirichlet=1, notes=""):
        lo = tuple([-1.0] * self.n)
        hi = tuple([1.0] * self.n)
        return check_scene(SceneSpec(name, self.n, lo, hi, self.h, d, dirichlet,
                                     tuple(curves), tuple(patches), notes))


def _rect(p0, e1, e2):
    """Two triangles spanning p0 + [0,1] e1 + [0,1] e2, normal along e1 x e2."""
    p0, e1, e2 = (np.asarray(v, dtype=float) for v in (p0, e1, e2))
    a, b, c, d = p0, p0 + e1, p0 + e1 + e2, p0 + e2
    return [(a, b, c), (a, c, d)]


def _tri_units(F, tris):
    return tuple(tuple(F.p(*v) for v in tri) for tri in tris)


def _normal(tri):
    a, b, c = (np.asarray(v, dtype=float) for v in tri)
    return np.cross(b - a, c - a)


def _flip(tri):
    return (tri[0], tri[2], tri[1])


def orient_coherently(tris, seed, seed_normal, blocked=()):
    """Flip triangles so shared edges are traversed oppositely.

    Orientation spreads from triangle ``seed`` (made to agree with
    ``seed_normal``) across shared edges, except edges listed in ``blocked``
    (unordered vertex pairs in cell units).
    """
    tris = [tuple(tuple(float(x) for x in v) for v in t) for t in tris]
    if np.dot(_normal(tris[seed]), seed_normal) < 0:
        tris[seed] = _flip(tris[seed])
    blocked = {frozenset((tuple(map(float, a)), tuple(map(float, b)))) for a, b in blocked}
    by_edge = {}
    for i, t in enumerate(tris):
        for k in range(3):
            e = frozenset((t[k], t[(k + 1) % 3]))
            by_edge.setdefault(e, []).append(i)
    done = {seed}
    todo = [seed]
    while todo:
        i = todo.pop()
        t = tris[i]
        for k in range(3):
            u, v = t[k], t[(k + 1) % 3]
            e = frozenset((u, v))
            if e in blocked:
                continue
            for j in by_edge[e]:
                if j in done:
                    continue
                tj = tris[j]
                same = any(tj[m] == u and tj[(m + 1) % 3] == v for m in range(3))
                if same:
                    tris[j] = _flip(tj)
                done.add(j)
                todo.append(j)
    if len(done) != len(tris):
        raise SceneError("surface is not edge-connected")
    return tris


def two_points_2d(N=32, variant="straight"):
    """Two boundary points at axis distance 10 cells joined by a (1 2) cut.

    Variants move the cut: "straight" (segment), "above" and "below" (detours
    three cells off the segment).
    """
    F = _Frame(2, N)
    c = N // 2
    dist = 10 if N >= 16 else max(2, 2 * ((N - 6) // 2))
    x1, x2 = c - dist // 2, c + dist // 2
    off = {"straight": 0, "above": 3, "below": -3}
    if variant not in off:
        raise SceneError(f"unknown variant {variant!r} for two_points_2d")
    k = off[variant]
    if k == 0:
        poly = [F.p(x1, c), F.p(x2, c)]
    else:
        poly = [F.p(x1, c), F.p(x1, c + k), F.p(x2, c + k), F.p(x2, c)]
    curves = [Curve("boundary", (F.p(x1, c), F.p(x2, c)))]
    patches = [CutPatchSpec("cut", _cyc(2, "(1 2)"), polyline=tuple(poly))]
    name = "two_points_2d" if variant == "straight" else f"two_points_2d:{variant}"
    return F.scene(name, 2, curves, patches,
                   notes=f"points at cells ({x1},{c}) and ({x2},{c}); distance {dist} cells")


def steiner3_2d(N=32):
    """Three points on a near-equilateral triangle, side 20 cells at N = 32.

    The apex height is rounded up to a whole cell: ceil(10 sqrt(3)) = 18.
    Cuts: (1 2) from p1 to p2 and (1 3) from p1 to p3.
    """
    F = _Frame(2, N)
    side = 2 * int(round(10 * N / 32))
    height = int(math.ceil(side / 2 * math.sqrt(3)))
    x0, y0 = (N - side) // 2, (N - height) // 2
    p1, p2, p3 = (x0, y0), (x0 + side, y0), (x0 + side // 2, y0 + height)
    curves = [Curve("boundary", (F.p(*p1), F.p(*p2), F.p(*p3)))]
    patches = [CutPatchSpec("c12", _cyc(3, "(1 2)"), polyline=(F.p(*p1), F.p(*p2))),
               CutPatchSpec("c13", _cyc(3, "(1 3)"), polyline=(F.p(*p1), F.p(*p3)))]
    return F.scene("steiner3_2d", 3, curves, patches,
                   notes=f"side {side} cells, height {height} cells")


def circle_3d(N=32, vertices=64):
    """Horizontal circle of radius 8 cells (at N = 32) spanned by a (1 2) disk."""
    F = _Frame(3, N)
    c = N / 2
    r = 8.0 * N / 32
    ring = [(c + r * math.cos(2 * math.pi * k / vertices),
             c + r * math.sin(2 * math.pi * k / vertices), c) for k in range(vertices)]
    ring.append(ring[0])
    center = (c, c, c)
    tris = [(center, ring[k], ring[k + 1]) for k in range(vertices)]
    curves = [Curve("boundary", tuple(F.p(*q) for q in ring))]
    patches = [CutPatchSpec("disk", _cyc(2, "(1 2)"), triangles=_tri_units(F, tris))]
    return F.scene("circle_3d", 2, curves, patches, notes=f"radius {r} cells")


def cube_skeleton(N=24):
    """Edges of a cube of side N/2; faces oriented from outside to inside.

    Front and back (the y faces) carry the identity, the x faces (1 2 3)
    and the z faces (1 3 2).
    """
    F = _Frame(3, N)
    s = N // 4
    lo, hi = N // 2 - s, N // 2 + s
    L = hi - lo
    perms = {0: "(1 2 3)", 1: "", 2: "(1 3 2)"}
    patches = []
    for a in range(3):
        b, c = (a + 1) % 3, (a + 2) % 3
        for side, coord, inward in (("lo", lo, 1), ("hi", hi, -1)):
            p0 = [lo] * 3
            p0[a] = coord
            e1 = [0] * 3
            e2 = [0] * 3
            e1[b], e2[c] = L, L
            tris = _rect(p0, e1, e2)
            if inward < 0:
                tris = [_flip(t) for t in tris]
            name = f"{'xyz'[a]}{side}"
            patches.append(CutPatchSpec(name, _cyc(3, perms[a]), triangles=_tri_units(F, tris)))
    curves = []
    for a in range(3):
        b, c = (a + 1) % 3, (a + 2) % 3
        for vb in (lo, hi):
            for vc in (lo, hi):
                p, q = [0] * 3, [0] * 3
                p[a], q[a] = lo, hi
                p[b] = q[b] = vb
                p[c] = q[c] = vc
                curves.append(Curve("boundary", (F.p(*p), F.p(*q))))
    return F.scene("cube_skeleton", 3, curves, patches,
                   notes=f"cube [{lo},{hi}]^3 in cell units")


# Almgren-type frame: a large horizontal disk with a ribbon leaving its edge,
# looping over it and plunging back through it; the part below the disk is a
# tongue. A wire C encircles the ribbon next to the disk. Cell units at N = 24.
ALMGREN_LOWER_LOBE = (9, 10, 11)


def almgren(N=24):
    F = _Frame(3, N)
    k = N / 24

    def u(*v):
        return tuple(x * k for x in v)

    z = 11
    disk = _rect(u(4, 6, z), u(10, 0, 0), u(0, 12, 0)) + _rect(u(14, 10, z), u(2, 0, 0), u(0, 4, 0))
    ribbon = (_rect(u(16, 10, z), u(2, 0, 0), u(0, 4, 0))
              + _rect(u(18, 10, z), u(0, 0, 5), u(0, 4, 0))
              + _rect(u(9, 10, z + 5), u(0, 4, 0), u(9, 0, 0))
              + _rect(u(9, 10, z), u(0, 4, 0), u(0, 0, 5)))
    tongue = _rect(u(9, 10, z - 5), u(0, 4, 0), u(0, 0, 5))
    wire_disk = _rect(u(16, 8, z - 2), u(0, 8, 0), u(0, 0, 4))
    frame = [(14, 10, z), (14, 6, z), (4, 6, z), (4, 18, z), (14, 18, z), (14, 14, z),
             (18, 14, z), (18, 14, z + 5), (9, 14, z + 5), (9, 14, z), (9, 14, z - 5),
             (9, 10, z - 5), (9, 10, z), (9, 10, z + 5), (18, 10, z + 5), (18, 10, z),
             (14, 10, z)]
    wire = [(16, 8, z - 2), (16, 16, z - 2), (16, 16, z + 2), (16, 8, z + 2), (16, 8, z - 2)]
    curves = [Curve("boundary", tuple(F.p(*u(*q)) for q in frame)),
              Curve("invisible_wire", tuple(F.p(*u(*q)) for q in wire))]
    patches = [CutPatchSpec("wire_disk", _cyc(3, "(2 3)"), triangles=_tri_units(F, wire_disk)),
               CutPatchSpec("large_disk", _cyc(3, "(1 2)"), triangles=_tri_units(F, disk)),
               CutPatchSpec("ribbon", _cyc(3, "(1 3)"), triangles=_tri_units(F, ribbon)),
               CutPatchSpec("tongue", _cyc(3, "(2 3)"), triangles=_tri_units(F, tongue))]
    return F.scene("almgren", 3, curves, patches,
                   notes="frame segments 9, 10, 11 bound the tongue below the disk")


def moebius_retract(N=24):
    """Boundary of a Moebius band built from a rectangular wall with one half twist.

    The band carries (1 2 3) with a coherent orientation except across one
    seam, where the orientation flips; the wire disk (2 3) crosses the band
    exactly along that seam.
    """
    F = _Frame(3, N)
    k = N / 24

    def u(*v):
        return tuple(x * k for x in v)

    X0, X1, Y0, Y1 = 5, 19, 7, 17
    Zb, Zm, Zt = 9, 12, 15
    x1, x2, xs, w = 9, 13, 12, 3

    def wall_x(xa, xb, y):
        return (_rect((xa, y, Zb), (xb - xa, 0, 0), (0, 0, Zm - Zb))
                + _rect((xa, y, Zm), (xb - xa, 0, 0), (0, 0, Zt - Zm)))

    def wall_y(x, ya, yb):
        return (_rect((x, ya, Zb), (0, yb - ya, 0), (0, 0, Zm - Zb))
                + _rect((x, ya, Zm), (0, yb - ya, 0), (0, 0, Zt - Zm)))

    def twist(x, up_side):
        c = (x, Y0, Zm)
        top, bot = (x, Y0, Zt), (x, Y0, Zb)
        left, right = (x, Y0 - w, Zm), (x, Y0 + w, Zm)
        if up_side == "left":
            return [(c, top, left), (c, bot, right)]
        return [(c, top, right), (c, bot, left)]

    floor = (_rect((x1, Y0 - w, Zm), (x2 - x1, 0, 0), (0, w, 0))
             + _rect((x1, Y0, Zm), (x2 - x1, 0, 0), (0, w, 0)))
    part_a = (wall_x(xs, X1, Y1) + wall_y(X1, Y0, Y1) + wall_x(x2, X1, Y0)
              + twist(x2, "right") + floor)
    part_b = twist(x1, "left") + wall_x(X0, x1, Y0) + wall_y(X0, Y0, Y1) + wall_x(X0, xs, Y1)
    seam = [((xs, Y1, Zb), (xs, Y1, Zm)), ((xs, Y1, Zm), (xs, Y1, Zt))]
    tris = orient_coherently(part_a + part_b, 0, (0, 1, 0), blocked=seam)
    band_a = [tuple(u(*v) for v in t) for t in tris[:len(part_a)]]
    band_b = [tuple(u(*v) for v in t) for t in tris[len(part_a):]]
    wire_disk = _rect(u(xs, Y1 - 2, Zb - 2), u(0, 4, 0), u(0, 0, Zt - Zb + 4))
    frame = [(x2, Y0, Zt), (X1, Y0, Zt), (X1, Y1, Zt), (X0, Y1, Zt), (X0, Y0, Zt), (x1, Y0, Zt),
             (x1, Y0 - w, Zm), (x2, Y0 - w, Zm), (x2, Y0, Zb), (X1, Y0, Zb), (X1, Y1, Zb),
             (X0, Y1, Zb), (X0, Y0, Zb), (x1, Y0, Zb), (x1, Y0 + w, Zm), (x2, Y0 + w, Zm),
             (x2, Y0, Zt)]
    wire = [(xs, Y1 - 2, Zb - 2), (xs, Y1 + 2, Zb - 2), (xs, Y1 + 2, Zt + 2),
            (xs, Y1 - 2, Zt + 2), (xs, Y1 - 2, Zb - 2)]
    curves = [Curve("boundary", tuple(F.p(*u(*q)) for q in frame)),
              Curve("invisible_wire", tuple(F.p(*u(*q)) for q in wire))]
    patches = [CutPatchSpec("wire_disk", _cyc(3, "(2 3)"), triangles=_tri_units(F, wire_disk)),
               CutPatchSpec("band_a", _cyc(3, "(1 2 3)"), triangles=_tri_units(F, band_a)),
               CutPatchSpec("band_b", _cyc(3, "(1 2 3)"), triangles=_tri_units(F, band_b))]
    return F.scene("moebius_retract", 3, curves, patches,
                   notes="Moebius band with a seam at the wire disk")


def _octahedron(N):
    F = _Frame(3, N)
    c = N // 2
    R = int(round(9 * N / 24))
    V = {}
    for a in range(3):
        for s in (1, -1):
            p = [c, c, c]
            p[a] += s * R
            V[(a, s)] = tuple(p)
    edges = []
    for a in range(3):
        for b in range(a + 1, 3):
            for sa in (1, -1):
                for sb in (1, -1):
                    edges.append((V[(a, sa)], V[(b, sb)]))
    curves = [Curve("boundary", (F.p(*p), F.p(*q))) for p, q in edges]
    return F, c, R, V, curves


def octahedron_checker(N=24):
    """Four octahedron faces in checkerboard fashion, each (1 2 3), oriented outward."""
    F, c, R, V, curves = _octahedron(N)
    patches = []
    for signs in ((1, 1, 1), (1, -1, -1), (-1, 1, -1), (-1, -1, 1)):
        tri = (V[(0, signs[0])], V[(1, signs[1])], V[(2, signs[2])])
        if np.dot(_normal(tri), signs) < 0:
            tri = _flip(tri)
        name = "f" + "".join("+" if s > 0 else "-" for s in signs)
        patches.append(CutPatchSpec(name, _cyc(3, "(1 2 3)"), triangles=_tri_units(F, [tri])))
    return F.scene("octahedron_checker", 3, curves, patches)


def octahedron_diametral(N=24):
    """Three diametral squares through the octahedron axes, each (1 2 3)."""
    F, c, R, V, curves = _octahedron(N)
    patches = []
    for a in range(3):
        b, cc = (a + 1) % 3, (a + 2) % 3
        sq = [V[(b, 1)], V[(cc, 1)], V[(b, -1)], V[(cc, -1)]]
        tris = [(sq[0], sq[1], sq[2]), (sq[0], sq[2], sq[3])]
        normal = [0, 0, 0]
        normal[a] = 1
        if np.dot(_normal(tris[0]), normal) < 0:
            tris = [_flip(t) for t in tris]
        patches.append(CutPatchSpec(f"sq{'xyz'[a]}", _cyc(3, "(1 2 3)"),
                                    triangles=_tri_units(F, tris)))
    return F.scene("octahedron_diametral", 3, curves, patches)


_BUILDERS = {
    "two_points_2d": two_points_2d, "steiner3_2d": steiner3_2d, "circle_3d": circle_3d,
    "cube_skeleton": cube_skeleton, "almgren": almgren, "moebius_retract": moebius_retract,
    "octahedron_checker": octahedron_checker, "octahedron_diametral": octahedron_diametral,
}


def builtin_scene(name, grid=None):
    """Built-in scene by name; ``name:variant`` selects a variant where offered."""
    base, _, variant = name.partition(":")
    if base not in _BUILDERS:
        raise SceneError(f"unknown built-in scene {name!r}; choose from {', '.join(BUILTIN_NAMES)}")
    N = grid or DEFAULT_GRID[base]
    if N < 8:
        raise SceneError("grid must have at least 8 cells per axis")
    if variant:
        if base != "two_points_2d":
            raise SceneError(f"scene {base} has no variants")
        return two_points_2d(N, variant)
    return _BUILDERS[base](N)


def builtin_group(name):
    """(homomorphism, basepoint) carried as data with each built-in scene."""
    base = name.partition(":")[0]
    free = lambda gens: Presentation(tuple(gens), ())
    c3 = lambda t: _cyc(3, t)
    if base == "two_points_2d":
        hom = Homomorphism(free("ab"), {"a": _cyc(2, "(1 2)"), "b": _cyc(2, "(1 2)")})
    elif base == "circle_3d":
        hom = Homomorphism(free("a"), {"a": _cyc(2, "(1 2)")})
    elif base == "steiner3_2d":
        hom = Homomorphism(free("abc"), {"a": c3("(1 2 3)"), "b": c3("(1 2)"), "c": c3("(1 3)")})
    elif base == "almgren":
        hom = Homomorphism(free("ab"), {"a": c3("(1 2)"), "b": c3("(2 3)")})
    elif base in ("cube_skeleton", "octahedron_checker", "octahedron_diametral"):
        hom = Homomorphism(free("abcde"), {g: c3("(1 2 3)") for g in "abcde"})
    elif base == "moebius_retract":
        rel = Word.parse("abab") * Word.parse("baba").inverse()
        hom = Homomorphism(Presentation(("a", "b"), (rel,)), {"a": c3("(1 2 3)"), "b": c3("(2 3)")})
    else:
        raise SceneError(f"unknown built-in scene {name!r}")
    return hom, 1


def _tiny(name, dims, path, perm_text, d, dirichlet=1, roles=("boundary", "boundary"), h=1.0):
    """Two frame points joined by a cut polyline through ``path`` (vertex units)."""
    lo = (0.0, 0.0)
    hi = tuple(float(n) * h for n in dims)
    pts = tuple(tuple(float(x) * h for x in p) for p in path)
    curves = tuple(Curve(role, (p,)) for role, p in zip(roles, (pts[0], pts[-1])))
    patches = ()
    if perm_text is not None:
        patches = (CutPatchSpec("cut", _cyc(d, perm_text), polyline=pts),)
    return check_scene(SceneSpec(name, 2, lo, hi, h, d, dirichlet, curves, patches))


def tiny_scenes():
    """Scenes small enough for exhaustive search: at most 20 free cells for
    d = 2 and at most 12 for d = 3."""
    return [
        _tiny("tiny_d2_h", (6, 5), [(2, 2), (4, 2)], "(1 2)", 2),
        _tiny("tiny_d2_v", (5, 6), [(2, 2), (2, 4)], "(1 2)", 2),
        _tiny("tiny_d2_dir2", (7, 5), [(2, 2), (5, 2)], "(1 2)", 2, dirichlet=2),
        _tiny("tiny_d2_wire", (6, 6), [(2, 2), (4, 2)], "(1 2)", 2,
              roles=("boundary", "invisible_wire")),
        _tiny("tiny_d2_nocut", (6, 5), [(2, 2), (4, 2)], None, 2),
        _tiny("tiny_d2_half", (6, 5), [(2, 2), (4, 2)], "(1 2)", 2, h=0.5),
        _tiny("tiny_d2_bend", (6, 7), [(2, 2), (4, 2), (4, 5)], "(1 2)", 2),
        _tiny("tiny_d2_detour", (7, 6), [(2, 2), (2, 4), (5, 4), (5, 2)], "(1 2)", 2),
        _tiny("tiny_d3_123", (6, 5), [(2, 2), (4, 2)], "(1 2 3)", 3),
        _tiny("tiny_d3_132_v", (5, 6), [(2, 2), (2, 4)], "(1 3 2)", 3),
        _tiny("tiny_d3_12", (6, 5), [(2, 2), (4, 2)], "(1 2)", 3),
        _tiny("tiny_d3_23", (6, 5), [(2, 2), (4, 2)], "(2 3)", 3),
        _tiny("tiny_d3_13_dir3", (5, 6), [(2, 2), (2, 4)], "(1 3)", 3, dirichlet=3),
        _tiny("tiny_d3_12_dir3", (6, 5), [(2, 2), (4, 2)], "(1 2)", 3, dirichlet=3),
        _tiny("tiny_d3_bend", (5, 5), [(2, 2), (3, 2), (3, 3)], "(1 2 3)", 3),
        _tiny("tiny_d3_wire", (5, 6), [(2, 2), (2, 4)], "(1 2 3)", 3,
              roles=("boundary", "invisible_wire")),
    ]
