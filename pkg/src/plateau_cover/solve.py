"""Minimizers of the constrained energy.

brute_force enumerates every labeling, mincut_degree2 solves an s-t cut on
the double cover, and heuristic runs annealed Gibbs sweeps, conditional
re-labeling and expansion moves. All arithmetic on energies is integer.
"""

from __future__ import annotations

import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import breadth_first_order, maximum_flow

from .functional import Labeling, pair_terms
from .scene.raster import reference_section

log = logging.getLogger(__name__)

DEFAULT_MAX_STATES = 1 << 24
INT32_MAX = np.iinfo(np.int32).max


class SolveError(ValueError):
    pass


@dataclass
class SolveResult:
    labeling: Labeling
    energy: float
    tv: float
    solver: str
    certificate: str
    seed: int
    wallclock: float
    energy_int: int = 0
    weighting: str = "plain"
    info: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Schedule:
    """Annealing schedule: T starts at ``t0_factor`` times the mean pair weight."""

    t0_factor: float = 1.0
    decay: float = 0.95
    patience: int = 50
    max_sweeps: int = 400
    expansion: bool = True


def _result(raster, cover, weighting, sheet, solver, cert, seed, t0, **info):
    lab = Labeling.create(raster, sheet)
    terms = pair_terms(cover, weighting)
    e_int = terms.energy_int(lab.sheet.ravel().astype(np.int64) - 1)
    e = e_int * terms.unit
    return SolveResult(lab, e, 2.0 * e, solver, cert, seed, time.perf_counter() - t0,
                       e_int, weighting, info)


def _free_vars(raster):
    return np.flatnonzero(~raster.collar.ravel())


def brute_force(raster, cover, weighting="plain", max_states=DEFAULT_MAX_STATES, terms=None):
    """Exhaustive minimum; ties go to the lexicographically smallest labeling."""
    t0 = time.perf_counter()
    terms = terms or pair_terms(cover, weighting)
    d = raster.degree
    var = _free_vars(raster)
    k = var.size
    if d ** k > max_states:
        raise SolveError(f"state space {d}^{k} exceeds the limit {max_states}")
    base = np.full(raster.ncells, raster.dirichlet_sheet - 1, dtype=np.int64)
    total = d ** k
    # pairs between two collar cells add a constant and cannot move the argmin
    free = np.zeros(raster.ncells, dtype=bool)
    free[var] = True
    live = free[terms.i] | free[terms.j]
    # re-index live pairs onto the variables plus one slot per fixed sheet
    slot = np.full(raster.ncells, -1, dtype=np.int64)
    slot[var] = np.arange(k)
    pi, pj = terms.i[live], terms.j[live]
    si = np.where(slot[pi] >= 0, slot[pi], k + base[pi])
    sj = np.where(slot[pj] >= 0, slot[pj], k + base[pj])
    P = terms.perm[live]
    w = terms.w[live]
    rows = np.arange(w.size)
    chunk = max(1, min(total, (1 << 23) // max(1, w.size)))
    powers = d ** np.arange(k - 1, -1, -1, dtype=np.int64)
    fixed_cols = np.broadcast_to(np.arange(d, dtype=np.int8), (chunk, d))
    best_e, best_m = None, None
    for start in range(0, total, chunk):
        m = np.arange(start, min(total, start + chunk), dtype=np.int64)
        S = np.empty((m.size, k + d), dtype=np.int8)
        S[:, :k] = (m[:, None] // powers[None, :]) % d
        S[:, k:] = fixed_cols[:m.size]
        mism = S[:, sj] != P[rows[None, :], S[:, si]]
        E = mism @ w
        a = int(np.argmin(E))
        if best_e is None or E[a] < best_e:
            best_e, best_m = int(E[a]), int(m[a])
    digits = (best_m // powers) % d
    sheet = base.copy()
    sheet[var] = digits
    return _result(raster, cover, weighting, (sheet + 1).reshape(raster.dims), "brute",
                   "exact", 0, t0, states=total)


def _residual_source_side(cap, flow, source):
    res = (cap - flow).tocsr()
    res.data = (res.data > 0).astype(np.int8)
    res.eliminate_zeros()
    order = breadth_first_order(res, source, directed=True, return_predecessors=False)
    side = np.zeros(cap.shape[0], dtype=bool)
    side[order] = True
    return side


def _flow_graph(rows, cols, caps, n):
    keep = (rows != cols) & (caps > 0)
    rows, cols, caps = rows[keep], cols[keep], caps[keep]
    g = sp.coo_matrix((caps.astype(np.int64), (rows, cols)), shape=(n, n)).tocsr()
    g.sum_duplicates()
    if g.data.size and g.data.max() > INT32_MAX:
        raise SolveError("capacities overflow 32-bit max-flow")
    g.data = g.data.astype(np.int32)
    return g


def mincut_degree2(raster, cover, weighting="plain", fallback_seed=0):
    """Exact minimum for d = 2 via an s-t cut on the cover graph.

    Collar nodes on the Dirichlet sheet are merged into the source and the
    other collar nodes into the sink. Each cell takes sheet 1 iff its sheet-1
    node is on the source side; the result is certified by checking that
    twice its energy equals the cut value.
    """
    if raster.degree != 2:
        raise SolveError("mincut_degree2 needs degree 2")
    t0 = time.perf_counter()
    terms = pair_terms(cover, weighting)
    nc = raster.ncells
    collar = raster.collar.ravel()
    ds = raster.dirichlet_sheet - 1
    # graph index of cover node (cell, s): 0 source, 1 sink, else 2 + 2*cell + s
    def gidx(cells, s):
        out = 2 + 2 * cells + s
        col = collar[cells]
        out = np.where(col & (s == ds), 0, out)
        out = np.where(col & (s != ds), 1, out)
        return out

    rows, cols, caps = [], [], []
    for s in (0, 1):
        u = gidx(terms.i, np.full(terms.i.size, s))
        v = gidx(terms.j, terms.perm[:, s].astype(np.int64))
        rows += [u, v]
        cols += [v, u]
        caps += [terms.w, terms.w]
    n = 2 + 2 * nc
    g = _flow_graph(np.concatenate(rows), np.concatenate(cols), np.concatenate(caps), n)
    res = maximum_flow(g, 0, 1)
    cut = int(res.flow_value)
    side = _residual_source_side(g, res.flow, 0)
    cells = np.arange(nc)
    one_side = side[gidx(cells, np.zeros(nc, dtype=np.int64))]
    sheet = np.where(one_side, 1, 2).reshape(raster.dims)
    out = _result(raster, cover, weighting, sheet, "mincut", "exact", 0, t0, cut_value=cut)
    if 2 * out.energy_int == cut:
        return out
    log.warning("min-cut certificate failed (2E=%d, cut=%d); falling back to heuristic",
                2 * out.energy_int, cut)
    h = heuristic(raster, cover, weighting, seed=fallback_seed, init=out.labeling)
    h.info["cut_value"] = cut
    h.info["fallback_from"] = "mincut"
    return h


class _Local:
    """Per-color-class incidence for local label costs."""

    def __init__(self, raster, terms):
        n = raster.n
        grids = np.indices(raster.dims).reshape(n, -1)
        color = sum(((grids[k] % 2) << k) for k in range(n))
        movable = ~raster.collar.ravel()
        self.classes = []
        for c in range(1 << n):
            cells = np.flatnonzero((color == c) & movable)
            if not cells.size:
                continue
            pos = np.full(raster.ncells, -1, dtype=np.int64)
            pos[cells] = np.arange(cells.size)
            out_p = np.flatnonzero(pos[terms.i] >= 0)
            in_p = np.flatnonzero(pos[terms.j] >= 0)
            self.classes.append((cells, pos[terms.i[out_p]], out_p, pos[terms.j[in_p]], in_p))
        self.terms = terms
        self.d = raster.degree

    def costs(self, s, cls):
        cells, oi, out_p, ij, in_p = cls
        t = self.terms
        d = self.d
        out = np.zeros((d, cells.size), dtype=np.float64)
        sj = s[t.j[out_p]]
        P_out = t.perm[out_p]
        w_out = t.w[out_p]
        src_in = t.perm[in_p, s[t.i[in_p]]]
        w_in = t.w[in_p]
        for lab in range(d):
            out[lab] = (np.bincount(oi, weights=w_out * (sj != P_out[:, lab]), minlength=cells.size)
                        + np.bincount(ij, weights=w_in * (src_in != lab), minlength=cells.size))
        return out


def _icm(local, s, max_sweeps=1000):
    for _ in range(max_sweeps):
        changed = False
        for cls in local.classes:
            cells = cls[0]
            c = local.costs(s, cls)
            cur = s[cells]
            best = np.argmin(c, axis=0)
            better = c[best, np.arange(cells.size)] < c[cur, np.arange(cells.size)]
            if np.any(better):
                s[cells[better]] = best[better]
                changed = True
        if not changed:
            break
    return s


def _anneal(local, terms, s, rng, sched, t0):
    best_e = terms.energy_int(s)
    best = s.copy()
    since = 0
    T = t0
    for _ in range(sched.max_sweeps):
        for cls in local.classes:
            cells = cls[0]
            c = local.costs(s, cls)
            if T > 1e-9:
                z = np.exp(-(c - c.min(axis=0)) / T)
                cdf = np.cumsum(z / z.sum(axis=0), axis=0)
                r = rng.random(cells.size)
                s[cells] = np.minimum((cdf < r).sum(axis=0), local.d - 1)
            else:
                s[cells] = np.argmin(c, axis=0)
        e = terms.energy_int(s)
        if e < best_e:
            best_e, best = e, s.copy()
            since = 0
        else:
            since += 1
            if since >= sched.patience:
                break
        T *= sched.decay
    return best


def _expansion(raster, terms, s, alpha, movable):
    """Best fusion of s with the constant labeling alpha, via a roof-dual cut.

    Cells that the cut labels persistently take their optimal choice; the
    rest keep their current label, which never raises the energy.
    """
    var_mask = movable & (s != alpha)
    if not var_mask.any():
        return s
    vid = np.full(s.size, -1, dtype=np.int64)
    vars_ = np.flatnonzero(var_mask)
    K = vars_.size
    vid[vars_] = np.arange(K)
    i, j, P, w = terms.i, terms.j, terms.perm.astype(np.int64), terms.w
    si, sj = s[i], s[j]
    rows = np.arange(i.size)
    Pi = P[rows, si]
    Pa = P[:, alpha]
    A = w * (sj != Pi)
    B = w * (alpha != Pi)
    C = w * (sj != Pa)
    D = w * (alpha != Pa)
    vi, vj = vid[i], vid[j]
    th0 = np.zeros(K, dtype=np.int64)
    th1 = np.zeros(K, dtype=np.int64)
    only_i = (vi >= 0) & (vj < 0)
    only_j = (vi < 0) & (vj >= 0)
    np.add.at(th0, vi[only_i], A[only_i])
    np.add.at(th1, vi[only_i], C[only_i])
    np.add.at(th0, vj[only_j], A[only_j])
    np.add.at(th1, vj[only_j], B[only_j])
    both = (vi >= 0) & (vj >= 0)
    p, q = vi[both], vj[both]
    A, B, C, D = A[both], B[both], C[both], D[both]
    sub = A + D <= B + C
    lam01 = np.where(sub, B + C - A - D, 0)
    lam00 = np.where(sub, 0, A + D - B - C)
    base = np.where(sub, A, B + C - D)
    lin_p = C - base
    lin_q = D - C
    for idx, lin in ((p, lin_p), (q, lin_q)):
        np.add.at(th1, idx, np.maximum(lin, 0))
        np.add.at(th0, idx, np.maximum(-lin, 0))
    m = np.minimum(th0, th1)
    th0 -= m
    th1 -= m
    S, T = 2 * K, 2 * K + 1
    ar = np.arange(K)
    bar = K + ar
    rows_, cols_, caps_ = [], [], []

    def edge(u, v, c):
        rows_.append(np.asarray(u))
        cols_.append(np.asarray(v))
        caps_.append(np.asarray(c))

    edge(np.full(K, S), ar, th1)
    edge(bar, np.full(K, T), th1)
    edge(ar, np.full(K, T), th0)
    edge(np.full(K, S), bar, th0)
    edge(p, q, lam01)
    edge(K + q, K + p, lam01)
    edge(p, K + q, lam00)
    edge(q, K + p, lam00)
    g = _flow_graph(np.concatenate(rows_), np.concatenate(cols_), np.concatenate(caps_), 2 * K + 2)
    res = maximum_flow(g, S, T)
    side = _residual_source_side(g, res.flow, S)
    x1 = ~side[ar] & side[bar]
    out = s.copy()
    out[vars_[x1]] = alpha
    return out


def _run_restart(raster, cover, terms, local, seed, r, sched, init):
    rng = np.random.default_rng([seed, r])
    movable = ~raster.collar.ravel()
    d = raster.degree
    if init is not None and r == 0:
        s = init.sheet.ravel().astype(np.int64) - 1
    elif r == 0:
        s = np.full(raster.ncells, raster.dirichlet_sheet - 1, dtype=np.int64)
    elif r == 1:
        s = reference_section(raster).ravel().astype(np.int64) - 1
    else:
        s = np.full(raster.ncells, raster.dirichlet_sheet - 1, dtype=np.int64)
        s[movable] = rng.integers(0, d, size=int(movable.sum()))
    pos = terms.w[terms.w > 0]
    t0 = sched.t0_factor * (float(pos.mean()) if pos.size else 1.0)
    s = _anneal(local, terms, s, rng, sched, t0)
    s = _icm(local, s)
    e = terms.energy_int(s)
    if sched.expansion:
        improved = True
        while improved:
            improved = False
            for alpha in range(d):
                cand = _icm(local, _expansion(raster, terms, s, alpha, movable))
                ce = terms.energy_int(cand)
                if ce < e:
                    s, e, improved = cand, ce, True
    return e, s


def thread_count():
    try:
        return max(1, int(os.environ.get("PLATEAU_COVER_THREADS", "1")))
    except ValueError:
        return 1


def heuristic(raster, cover, weighting="plain", seed=0, restarts=8, schedule=None, init=None,
              workers=None):
    """Multi-start annealing plus expansion moves; deterministic given the seed.

    Restart 0 starts from the constant Dirichlet labeling (or ``init``),
    restart 1 from the fewest-crossings section, the rest from random labels.
    """
    t0 = time.perf_counter()
    sched = schedule or Schedule()
    terms = pair_terms(cover, weighting)
    local = _Local(raster, terms)
    workers = workers or thread_count()
    jobs = range(max(1, restarts))
    run = lambda r: _run_restart(raster, cover, terms, local, seed, r, sched, init)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(run, jobs))
    else:
        results = [run(r) for r in jobs]
    e, s = min(results, key=lambda es: (es[0], tuple(es[1])))
    energies = [int(x[0]) for x in results]
    return _result(raster, cover, weighting, (s + 1).reshape(raster.dims), "heuristic",
                   "heuristic", seed, t0, restarts=len(results), restart_energies=energies)


def solve(raster, cover, weighting="plain", solver="auto", seed=0, restarts=8,
          max_states=DEFAULT_MAX_STATES, schedule=None):
    if solver == "auto":
        if raster.degree == 2:
            solver = "mincut"
        elif raster.degree ** int((~raster.collar).sum()) <= max_states:
            solver = "brute"
        else:
            solver = "heuristic"
    if solver == "brute":
        return brute_force(raster, cover, weighting, max_states)
    if solver == "mincut":
        return mincut_degree2(raster, cover, weighting, fallback_seed=seed)
    if solver == "heuristic":
        return heuristic(raster, cover, weighting, seed=seed, restarts=restarts, schedule=schedule)
    raise SolveError(f"unknown solver {solver!r}")
