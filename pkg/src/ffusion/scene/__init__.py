"""Deterministic synthetic scene generation, rendering and datasets."""

from ffusion.scene.commands import COMMAND_IDS, COMMANDS, SENTENCES, derive_command
from ffusion.scene.dataset import (
    Sample,
    build_dataset,
    load_dataset,
    load_sample,
    manifest_intrinsics,
    quantize_rgb,
    read_manifest,
    read_ppm,
    synthesize_sample,
    write_ppm,
)
from ffusion.scene.lidar import DEFAULT_PATTERN, LidarPattern, simulate_depth_scan, simulate_lidar
from ffusion.scene.render import (
    DEFAULT_INTRINSICS,
    LABEL_GRID,
    RayHits,
    cast_rays,
    pixel_directions,
    render_depth,
    render_labels,
    render_rgb,
)
from ffusion.scene.spec import (
    CLASS_IDS,
    CLASS_NAMES,
    GROUND_HEIGHT,
    MAX_OBJECTS,
    MIN_SPACING,
    OBJECT_CLASSES,
    SceneObject,
    SceneSpec,
    generate_scene,
)

__all__ = [
    "CLASS_IDS",
    "CLASS_NAMES",
    "COMMANDS",
    "COMMAND_IDS",
    "DEFAULT_INTRINSICS",
    "DEFAULT_PATTERN",
    "GROUND_HEIGHT",
    "LABEL_GRID",
    "LidarPattern",
    "MAX_OBJECTS",
    "MIN_SPACING",
    "OBJECT_CLASSES",
    "RayHits",
    "SENTENCES",
    "Sample",
    "SceneObject",
    "SceneSpec",
    "build_dataset",
    "cast_rays",
    "derive_command",
    "generate_scene",
    "load_dataset",
    "load_sample",
    "manifest_intrinsics",
    "pixel_directions",
    "quantize_rgb",
    "read_manifest",
    "read_ppm",
    "render_depth",
    "render_labels",
    "render_rgb",
    "simulate_depth_scan",
    "simulate_lidar",
    "synthesize_sample",
    "write_ppm",
]
