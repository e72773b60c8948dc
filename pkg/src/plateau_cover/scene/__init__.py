from .document import (Curve, CutPatchSpec, SceneError, SceneSpec, check_scene, parse_scene,
                       relabel_sheets, scene_from_dict, scene_to_dict, serialize_scene)
from .raster import (CLASSES, ElementRecord, RasterError, RasterScene, ValidationReport,
                     element_name, loop_cells, rasterize, reference_section, validate)
from .builtins import (BUILTIN_NAMES, DEFAULT_GRID, builtin_group, builtin_scene, tiny_scenes)

__all__ = [
    "Curve", "CutPatchSpec", "SceneError", "SceneSpec", "check_scene", "parse_scene",
    "relabel_sheets", "scene_from_dict", "scene_to_dict", "serialize_scene", "CLASSES",
    "ElementRecord", "RasterError", "RasterScene", "ValidationReport", "element_name",
    "loop_cells", "rasterize", "reference_section", "validate", "BUILTIN_NAMES", "DEFAULT_GRID",
    "builtin_group", "builtin_scene", "tiny_scenes",
]
