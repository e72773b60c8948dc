import json
from functools import lru_cache

import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from plateau_cover.cover import BasePath, build_cover, link2, path_monodromy
from plateau_cover.functional import Labeling, energy_int, jump_set, pair_terms, total_variation
from plateau_cover.measure import area, wetting_report
from plateau_cover.permgroup import Permutation, all_permutations, compose
from plateau_cover.scene import (builtin_scene, parse_scene, rasterize, relabel_sheets,
                                 serialize_scene, tiny_scenes, validate)
from plateau_cover.solve import brute_force, heuristic

SETTINGS = settings(max_examples=25, deadline=None,
                    suppress_health_check=[HealthCheck.too_slow])
SCENES = ("two_points_2d", "steiner3_2d", "cube_skeleton")


@lru_cache(maxsize=None)
def prepared(name, grid=None):
    r = rasterize(builtin_scene(name, grid))
    return r, build_cover(r)


def labeling(raster, seed, density):
    rng = np.random.default_rng(seed)
    s = np.full(raster.dims, raster.dirichlet_sheet, dtype=np.int64)
    flip = rng.random(raster.dims) < density
    s[flip] = rng.integers(1, raster.degree + 1, size=int(flip.sum()))
    s[raster.collar] = raster.dirichlet_sheet
    return Labeling.create(raster, s)


seeds = st.integers(0, 2 ** 32 - 1)
densities = st.floats(0.0, 1.0)
weightings = st.sampled_from(["plain", "crofton"])


@SETTINGS
@given(st.sampled_from(SCENES), seeds, densities, weightings)
def test_tv_is_twice_jump_area(name, seed, density, w):
    r, c = prepared(name, 16)
    lab = labeling(r, seed, density)
    js = jump_set(lab, c, w)
    assert total_variation(lab, c, w) == 2 * area(js, lab, c, w)


@settings(max_examples=10, deadline=None)
@given(st.sampled_from(["steiner3_2d", "almgren"]), st.sampled_from(list(all_permutations(3))),
       seeds, densities)
def test_gauge_invariance(name, g, seed, density):
    spec = builtin_scene(name)
    r, c = prepared(name)
    rg = rasterize(relabel_sheets(spec, g))
    cg = build_cover(rg)
    lab = labeling(r, seed, density)
    moved = Labeling.create(rg, np.vectorize(g)(lab.sheet))
    assert energy_int(lab, c, "crofton") == energy_int(moved, cg, "crofton")
    a = [(x.element, x.classification) for x in validate(r).records]
    b = [(x.element, x.classification) for x in validate(rg).records]
    assert a == b


@SETTINGS
@given(st.sampled_from(SCENES), st.data())
def test_fiber_size_is_degree(name, data):
    r, c = prepared(name, 16)
    cell = tuple(data.draw(st.integers(0, n - 1)) for n in r.dims)
    fib = c.fiber(cell)
    assert len(fib) == r.degree
    assert {c.node_cell(v)[0] for v in fib} == {cell}
    assert c.n_nodes == r.degree * r.ncells


def walk(raster, start, moves):
    """Closed cell walk: follow moves, then return along a monotone path."""
    cells = [start]
    for a, s in moves:
        nb = list(cells[-1])
        nb[a] = min(max(nb[a] + s, 0), raster.dims[a] - 1)
        if tuple(nb) != cells[-1]:
            cells.append(tuple(nb))
    cur = list(cells[-1])
    for a in range(raster.n):
        while cur[a] != start[a]:
            cur[a] += 1 if start[a] > cur[a] else -1
            cells.append(tuple(cur))
    if len(cells) > 1 and cells[-1] == cells[0]:
        cells.pop()
    return cells


moves2 = st.lists(st.tuples(st.integers(0, 1), st.sampled_from([1, -1])), max_size=60)
moves3 = st.lists(st.tuples(st.integers(0, 2), st.sampled_from([1, -1])), max_size=60)


@SETTINGS
@given(moves2, st.integers(0, 200), st.integers(0, 1), st.sampled_from([1, -1]))
def test_monodromy_backtrack_invariance(moves, pos, axis, sign):
    r, _ = prepared("steiner3_2d")
    cells = walk(r, (16, 16), moves)
    base = path_monodromy(r, BasePath(cells, closed=True))
    k = pos % len(cells)
    nb = list(cells[k])
    nb[axis] += sign
    padded = cells[:k + 1] + [tuple(nb), cells[k]] + cells[k + 1:]
    assert path_monodromy(r, BasePath(padded, closed=True)) == base


@SETTINGS
@given(moves3)
def test_monodromy_of_reversed_loop_is_inverse(moves):
    r, _ = prepared("cube_skeleton")
    cells = walk(r, (12, 12, 12), moves)
    fwd = path_monodromy(r, BasePath(cells, closed=True))
    back = path_monodromy(r, BasePath([cells[0]] + cells[1:][::-1], closed=True))
    assert compose(fwd, back).is_identity()


@SETTINGS
@given(moves2, moves2)
def test_link2_concatenation_xor(m1, m2):
    r, _ = prepared("two_points_2d")
    a = BasePath(walk(r, (16, 16), m1), closed=True)
    b = BasePath(walk(r, (16, 16), m2), closed=True)
    assert link2(r, a.concat(b)) == link2(r, a) ^ link2(r, b)


TINY = [s for s in tiny_scenes() if int((~rasterize(s).collar).sum()) <= 12]


@settings(max_examples=10, deadline=None)
@given(st.sampled_from(TINY), st.integers(1, 50), weightings)
def test_weight_scaling_keeps_argmin(spec, lam, w):
    r = rasterize(spec)
    c = build_cover(r)
    base = brute_force(r, c, w)
    terms = pair_terms(c, w).scaled(lam)
    scaled = brute_force(r, c, w, terms=terms)
    assert scaled.labeling.equals(base.labeling)
    assert terms.energy_int(scaled.labeling.sheet.ravel().astype(np.int64) - 1) == \
        lam * base.energy_int


@settings(max_examples=5, deadline=None)
@given(seeds)
def test_heuristic_determinism(seed):
    r, c = prepared("steiner3_2d", 16)
    a = heuristic(r, c, seed=seed, restarts=2)
    b = heuristic(r, c, seed=seed, restarts=2)
    assert a.labeling.equals(b.labeling) and a.energy_int == b.energy_int


@SETTINGS
@given(seeds, densities, st.lists(st.integers(0, 32 * 32 - 1), max_size=40))
def test_wetting_monotone_under_added_faces(seed, density, extra):
    r, c = prepared("two_points_2d")
    js = jump_set(labeling(r, seed, density), c)
    before = wetting_report(js, r)
    from plateau_cover.functional import JumpSet
    add = np.array(extra, dtype=np.int64)
    more = JumpSet(np.concatenate([js.i, add]), np.concatenate([js.j, add]),
                   np.concatenate([js.kind, np.ones_like(add)]),
                   np.concatenate([js.w_int, np.ones_like(add)]), js.unit, js.dims, js.h)
    after = wetting_report(more, r)
    for s0, s1 in zip(before.segments, after.segments):
        assert s1.wetted or not s0.wetted
        assert s1.min_distance <= s0.min_distance


@SETTINGS
@given(st.sampled_from(list(all_permutations(4))), st.sampled_from(list(all_permutations(4))),
       st.sampled_from(list(all_permutations(4))))
def test_composition_is_associative(p, q, s):
    assert compose(compose(p, q), s) == compose(p, compose(q, s))
    assert compose(p, Permutation.identity(4)) == p


@settings(max_examples=10, deadline=None)
@given(st.sampled_from(tiny_scenes()))
def test_scene_document_round_trip(spec):
    assert parse_scene(serialize_scene(spec)) == spec
    assert json.loads(serialize_scene(spec))["name"] == spec.name
