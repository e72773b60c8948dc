"""Minimal films spanning a frame, computed on covers of the frame's complement."""

from .cover import CoverError, CoverGraph, build_cover, link2, path_monodromy
from .functional import Labeling, energy, jump_set, total_variation
from .measure import export_obj, report_json, wetting_report
from .scene import builtin_scene, parse_scene, rasterize, validate
from .solve import SolveResult, brute_force, heuristic, mincut_degree2, solve

__version__ = "0.1.0"
