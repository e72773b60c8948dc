"""plateau-cover command-line front end.

Exit codes: 0 success, 1 domain failure, 2 usage or schema error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from .cover import BasePath, CoverError, build_cover, link2, path_monodromy, transport_labeling
from .functional import energy_int, jump_set, pair_terms
from .measure import export_obj, report_json, wetting_report
from .permgroup import (GroupError, Homomorphism, check_relations, is_normal, parse_hom_document,
                        subgroup_index)
from .scene import (BUILTIN_NAMES, DEFAULT_GRID, SceneError, builtin_group, builtin_scene,
                    check_scene, parse_scene, rasterize, validate)
from .solve import SolveError, solve

log = logging.getLogger("plateau_cover")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _load_scene(args, which="scene"):
    name = getattr(args, which, None)
    path = getattr(args, "file", None) if which == "scene" else None
    if bool(name) == bool(path):
        raise UsageError("give exactly one of --scene or --file")
    if name:
        return builtin_scene(name, args.grid)
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise UsageError(f"cannot read scene file {path}: {e.strerror}") from e
    spec = parse_scene(text)
    if args.grid:
        extent = spec.domain_max[0] - spec.domain_min[0]
        spec = check_scene(dataclasses.replace(spec, grid_spacing=extent / args.grid))
    return spec


def _config(args):
    keep = ("command", "scene", "scene_b", "file", "grid", "weighting", "solver", "seed",
            "restarts", "out")
    return {k: getattr(args, k) for k in keep if getattr(args, k, None) is not None}


def cmd_scenes(args):
    for name in BUILTIN_NAMES:
        spec = builtin_scene(name)
        print(f"{name:22s} {spec.dimension}D  d={spec.degree}  grid={DEFAULT_GRID[name]}  "
              f"patches={len(spec.cut_patches)}")
    return EXIT_OK


def cmd_validate(args):
    raster = rasterize(_load_scene(args))
    report = validate(raster)
    if args.json:
        print(json.dumps(report.to_dict(), indent=2))
    else:
        print(f"scene {raster.spec.name}  grid {'x'.join(map(str, raster.dims))}")
        print(report.summary())
    return EXIT_FAIL if report.status == "fail" else EXIT_OK


def _prepare(args, which="scene"):
    raster = rasterize(_load_scene(args, which))
    report = validate(raster)
    if report.status == "fail":
        print(report.summary(), file=sys.stderr)
        raise CoverError(f"scene {raster.spec.name} fails validation")
    return raster, report, build_cover(raster, report)


def cmd_solve(args):
    raster, report, cover = _prepare(args)
    res = solve(raster, cover, args.weighting, args.solver, seed=args.seed, restarts=args.restarts)
    jump = jump_set(res.labeling, cover, args.weighting)
    wet = wetting_report(jump, raster, report)
    out = Path(args.out)
    if not out.is_dir():
        raise OSError(f"output directory {out} does not exist")
    cfg = _config(args)
    report_json(res, wet, out / "report.json", raster, cfg)
    export_obj(jump, raster, out / "film.obj")
    print(f"scene      {raster.spec.name}")
    print(f"solver     {res.solver} ({res.certificate})")
    print(f"energy     {res.energy:.10g}")
    print(f"tv         {res.tv:.10g}")
    print(f"area       {jump.area():.10g}")
    print(f"wetted     {sum(s.wetted for s in wet.segments)}/{len(wet.segments)} segments")
    print(f"wallclock  {res.wallclock:.3f}s")
    return EXIT_OK


def cmd_compare_cuts(args):
    if not args.scene_b:
        raise UsageError("compare-cuts needs --scene-b")
    ra, _, ca = _prepare(args)
    rb, _, cb = _prepare(args, "scene_b")
    if ra.degree != 2 or rb.degree != 2:
        raise CoverError("compare-cuts needs two degree-2 scenes")
    a = solve(ra, ca, args.weighting, "mincut", seed=args.seed)
    b = solve(rb, cb, args.weighting, "mincut", seed=args.seed)
    moved = transport_labeling(a.labeling, ra, rb)
    e_moved = energy_int(moved, cb, args.weighting)
    unit = pair_terms(ca, args.weighting).unit
    print(f"A {ra.spec.name}: energy {a.energy:.10g}")
    print(f"B {rb.spec.name}: energy {b.energy:.10g}")
    print(f"A transported to B: energy {e_moved * unit:.10g}")
    ok = a.energy_int == b.energy_int == e_moved
    print("equal" if ok else "MISMATCH")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_group_check(args):
    if bool(args.scene) == bool(args.file):
        raise UsageError("give exactly one of --scene or --file")
    if args.scene:
        hom, base = builtin_group(args.scene)
        pres, images = hom.presentation, hom.images
    else:
        try:
            doc = json.loads(Path(args.file).read_text(encoding="utf-8"))
        except OSError as e:
            raise UsageError(f"cannot read {args.file}: {e.strerror}") from e
        except json.JSONDecodeError as e:
            raise UsageError(f"not valid JSON: {e}") from e
        try:
            pres, images, base = parse_hom_document(doc)
        except GroupError as e:
            raise UsageError(str(e)) from e
    ok = check_relations(pres, images)
    out = {"relations_ok": ok, "index": None, "normal": None}
    if ok:
        hom = Homomorphism(pres, images)
        out["index"] = subgroup_index(hom, base)
        out["normal"] = is_normal(hom, base)
    print(json.dumps(out))
    return EXIT_OK if ok else EXIT_FAIL


def cmd_monodromy(args):
    if not args.loop:
        raise UsageError("monodromy needs --loop (JSON list of cells, or a path to one)")
    text = args.loop
    if Path(text).is_file():
        text = Path(text).read_text(encoding="utf-8")
    try:
        cells = json.loads(text)
    except json.JSONDecodeError as e:
        raise UsageError(f"loop is not valid JSON: {e}") from e
    raster = rasterize(_load_scene(args))
    loop = BasePath(cells, closed=True)
    out = {"monodromy": str(path_monodromy(raster, loop))}
    if raster.degree == 2:
        out["link2"] = link2(raster, loop)
    print(json.dumps(out))
    return EXIT_OK


COMMANDS = {
    "scenes": cmd_scenes,
    "validate": cmd_validate,
    "solve": cmd_solve,
    "compare-cuts": cmd_compare_cuts,
    "group-check": cmd_group_check,
    "monodromy": cmd_monodromy,
}


def build_parser():
    p = argparse.ArgumentParser(prog="plateau-cover",
                                description="Minimal films spanning a frame via covers of its complement.")
    p.add_argument("command", choices=list(COMMANDS))
    src = p.add_mutually_exclusive_group()
    src.add_argument("--scene", help="built-in scene name (two_points_2d:above selects a variant)")
    src.add_argument("--file", help="scene JSON, or group JSON for group-check")
    p.add_argument("--scene-b", help="second scene for compare-cuts")
    p.add_argument("--grid", type=int, help="cells per axis (>= 8)")
    p.add_argument("--weighting", choices=["plain", "crofton"], default="plain")
    p.add_argument("--solver", choices=["auto", "brute", "mincut", "heuristic"], default="auto")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=8)
    p.add_argument("--out", default=".", help="output directory for solve artifacts")
    p.add_argument("--loop", help="monodromy loop: JSON cell list or file")
    p.add_argument("--json", action="store_true", help="machine-readable validate output")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.grid is not None and args.grid < 8:
        print("error: --grid must be at least 8", file=sys.stderr)
        return EXIT_USAGE
    if args.restarts < 1:
        print("error: --restarts must be positive", file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except (UsageError, SceneError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (CoverError, SolveError, GroupError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
