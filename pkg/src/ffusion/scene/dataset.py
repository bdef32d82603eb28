"""Sample container, image/label file formats and dataset build/load.

A dataset directory holds manifest.json plus five files per sample:
    rgb_<id>.ppm      ASCII PPM (P3), 8-bit
    cloud_<id>.pcd    sensor point cloud (FFUSION-PCD v1)
    depth_<id>.txt    rendered ground-truth depth (FFUSION-DEPTH v1)
    text_<id>.txt     instruction sentence, one line
    labels_<id>.txt   8x8 segmentation class grid (FFUSION-LABELS v1)

Building twice with the same seed produces byte-identical files. Samples
loaded from disk equal the ones synthesized in memory because rgb values
are quantized to the 8-bit grid before use.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from ffusion.autodiff.rng import Rng
from ffusion.errors import DataError
from ffusion.geometry.calibration import Intrinsics
from ffusion.geometry.depthmap import DepthMap, read_depth, write_depth
from ffusion.geometry.pointcloud import PointCloud, read_point_cloud, write_point_cloud
from ffusion.scene.commands import COMMAND_IDS, COMMANDS, derive_command
from ffusion.scene.lidar import simulate_depth_scan
from ffusion.scene.render import DEFAULT_INTRINSICS, LABEL_GRID, render_depth, render_labels, render_rgb
from ffusion.scene.spec import CLASS_NAMES, generate_scene

MANIFEST_FORMAT = "FFUSION-DATASET v1"
LABELS_MAGIC = "FFUSION-LABELS v1"
SPLITS = ("train", "val", "test")
DEFAULT_RATIOS = (0.8, 0.1, 0.1)
SCAN_ROW_STEP = 2


@dataclass(eq=False)
class Sample:
    """One multimodal example: image, point cloud, text, labels.

    registration_shift is bookkeeping for injected miscalibration: it states
    how far the depth content is displaced from the image grid and is
    consumed by the input preparation pipeline's registration stage.
    """

    sample_id: str
    rgb: np.ndarray
    cloud: PointCloud
    depth: DepthMap
    text: str
    command: str
    seg_labels: np.ndarray
    registration_shift: tuple = (0, 0)

    def __post_init__(self):
        rgb = np.ascontiguousarray(np.asarray(self.rgb, dtype=np.float64))
        if rgb.ndim != 3 or rgb.shape[2] != 3:
            raise DataError(f"rgb must be (h, w, 3), got {rgb.shape}")
        if self.command not in COMMAND_IDS:
            raise DataError(f"unknown command {self.command!r}")
        labels = np.asarray(self.seg_labels, dtype=np.int64)
        if labels.shape != (LABEL_GRID, LABEL_GRID):
            raise DataError(f"segmentation grid must be {LABEL_GRID}x{LABEL_GRID}, got {labels.shape}")
        if labels.min() < 0 or labels.max() >= len(CLASS_NAMES):
            raise DataError("segmentation labels outside the class palette")
        self.rgb = rgb
        self.seg_labels = labels

    @property
    def command_id(self) -> int:
        return COMMAND_IDS[self.command]


def quantize_rgb(rgb: np.ndarray) -> np.ndarray:
    """Snap to the 8-bit grid the PPM format stores."""
    return np.rint(np.clip(rgb, 0.0, 1.0) * 255.0) / 255.0


def write_ppm(rgb: np.ndarray, path) -> None:
    img = np.asarray(rgb, dtype=np.float64)
    if img.ndim != 3 or img.shape[2] != 3:
        raise DataError(f"rgb must be (h, w, 3), got {img.shape}")
    height, width = img.shape[:2]
    levels = np.rint(np.clip(img, 0.0, 1.0) * 255.0).astype(np.int64)
    lines = ["P3", f"{width} {height}", "255"]
    for r in range(height):
        lines.append(" ".join(str(v) for v in levels[r].reshape(-1)))
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def read_ppm(path) -> np.ndarray:
    tokens = Path(path).read_text(encoding="ascii").split()
    if not tokens or tokens[0] != "P3":
        raise DataError(f"unsupported image format in {path}")
    try:
        width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
        values = np.array([int(t) for t in tokens[4:]], dtype=np.int64)
    except (IndexError, ValueError) as exc:
        raise DataError(f"malformed PPM file {path}") from exc
    if maxval != 255:
        raise DataError(f"PPM maxval must be 255, got {maxval}")
    if values.size != width * height * 3:
        raise DataError(
            f"PPM holds {values.size} values, expected {width * height * 3}"
        )
    if values.min() < 0 or values.max() > 255:
        raise DataError("PPM values outside [0, 255]")
    return values.reshape(height, width, 3) / 255.0


def write_labels(labels: np.ndarray, path) -> None:
    grid = np.asarray(labels, dtype=np.int64)
    lines = [f"{LABELS_MAGIC} {grid.shape[1]} {grid.shape[0]}"]
    for row in grid:
        lines.append(" ".join(str(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def read_labels(path) -> np.ndarray:
    lines = Path(path).read_text(encoding="ascii").splitlines()
    if not lines:
        raise DataError(f"empty label file {path}")
    fields = lines[0].split()
    if len(fields) != 4 or " ".join(fields[:2]) != LABELS_MAGIC:
        raise DataError(f"unsupported label header {lines[0]!r}")
    width, height = int(fields[2]), int(fields[3])
    body = lines[1:]
    if len(body) != height:
        raise DataError(f"label file has {len(body)} rows, header says {height}")
    try:
        grid = np.array([[int(v) for v in line.split()] for line in body], dtype=np.int64)
    except ValueError as exc:
        raise DataError(f"malformed label row in {path}") from exc
    if grid.shape != (height, width):
        raise DataError(f"label rows do not match header in {path}")
    return grid


def synthesize_sample(
    sample_id: str,
    seed: int,
    intrinsics: Intrinsics = DEFAULT_INTRINSICS,
    row_step: int = SCAN_ROW_STEP,
) -> Sample:
    """Render one sample from its seed; rgb is pre-quantized to disk precision."""
    scene = generate_scene(seed)
    command, sentence = derive_command(scene)
    return Sample(
        sample_id=sample_id,
        rgb=quantize_rgb(render_rgb(scene, intrinsics)),
        cloud=simulate_depth_scan(scene, intrinsics, row_step),
        depth=render_depth(scene, intrinsics),
        text=sentence,
        command=command,
        seg_labels=render_labels(scene, intrinsics),
    )


def _split_sizes(count: int, ratios) -> dict:
    r = tuple(float(x) for x in ratios)
    if len(r) != 3 or any(x <= 0.0 for x in r) or abs(sum(r) - 1.0) > 1e-9:
        raise DataError(f"split ratios must be three positive numbers summing to 1, got {ratios}")
    n_val = int(count * r[1])
    n_test = int(count * r[2])
    n_train = count - n_val - n_test
    if n_train < 1:
        raise DataError(f"count {count} leaves no training samples")
    return {"train": n_train, "val": n_val, "test": n_test}


def _sample_files(sample_id: str) -> dict:
    return {
        "rgb": f"rgb_{sample_id}.ppm",
        "cloud": f"cloud_{sample_id}.pcd",
        "depth": f"depth_{sample_id}.txt",
        "text": f"text_{sample_id}.txt",
        "labels": f"labels_{sample_id}.txt",
    }


def build_dataset(
    out_dir,
    count: int,
    seed: int,
    ratios=DEFAULT_RATIOS,
    intrinsics: Intrinsics = DEFAULT_INTRINSICS,
) -> dict:
    """Generate `count` samples into out_dir and return the manifest.

    Every sample gets its own seed derived from (dataset seed, sample id),
    so splits are disjoint by construction and any sample can be rebuilt
    in isolation.
    """
    if count < 1:
        raise DataError(f"count must be positive, got {count}")
    sizes = _split_sizes(count, ratios)
    root = Rng(seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    boundaries = []
    offset = 0
    for split in SPLITS:
        boundaries.append((split, offset, offset + sizes[split]))
        offset += sizes[split]
    entries = []
    for i in range(count):
        sample_id = f"{i:06d}"
        sample_seed = root.derive_seed(f"sample/{sample_id}")
        split = next(name for name, lo, hi in boundaries if lo <= i < hi)
        sample = synthesize_sample(sample_id, sample_seed, intrinsics)
        files = _sample_files(sample_id)
        write_ppm(sample.rgb, out / files["rgb"])
        write_point_cloud(sample.cloud, out / files["cloud"])
        write_depth(sample.depth, out / files["depth"])
        (out / files["text"]).write_text(sample.text + "\n", encoding="ascii")
        write_labels(sample.seg_labels, out / files["labels"])
        entries.append(
            {
                "id": sample_id,
                "split": split,
                "seed": sample_seed,
                "command": sample.command,
                "files": files,
            }
        )
    manifest = {
        "format": MANIFEST_FORMAT,
        "count": count,
        "seed": seed,
        "ratios": list(ratios),
        "image": {
            "width": intrinsics.width,
            "height": intrinsics.height,
            "fx": intrinsics.fx,
            "fy": intrinsics.fy,
            "cx": intrinsics.cx,
            "cy": intrinsics.cy,
        },
        "scan_row_step": SCAN_ROW_STEP,
        "samples": entries,
    }
    (out / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="ascii"
    )
    return manifest


def read_manifest(dataset_dir) -> dict:
    path = Path(dataset_dir) / "manifest.json"
    if not path.is_file():
        raise DataError(f"no manifest.json under {dataset_dir}")
    try:
        manifest = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"manifest.json is not valid JSON: {exc}") from exc
    if manifest.get("format") != MANIFEST_FORMAT:
        raise DataError(f"unsupported dataset format {manifest.get('format')!r}")
    return manifest


def manifest_intrinsics(manifest: dict) -> Intrinsics:
    image = manifest.get("image", {})
    try:
        return Intrinsics(
            fx=float(image["fx"]),
            fy=float(image["fy"]),
            cx=float(image["cx"]),
            cy=float(image["cy"]),
            width=int(image["width"]),
            height=int(image["height"]),
        )
    except KeyError as exc:
        raise DataError(f"manifest image block is missing {exc}") from exc


def load_sample(dataset_dir, entry: dict) -> Sample:
    root = Path(dataset_dir)
    files = entry.get("files", {})
    for key in ("rgb", "cloud", "depth", "text", "labels"):
        if key not in files:
            raise DataError(f"manifest entry {entry.get('id')!r} lacks a {key} file")
        if not (root / files[key]).is_file():
            raise DataError(f"dataset file missing: {files[key]}")
    shift = entry.get("registration_shift", (0, 0))
    return Sample(
        sample_id=str(entry["id"]),
        rgb=read_ppm(root / files["rgb"]),
        cloud=read_point_cloud(root / files["cloud"]),
        depth=read_depth(root / files["depth"]),
        text=(root / files["text"]).read_text(encoding="ascii").strip(),
        command=str(entry["command"]),
        seg_labels=read_labels(root / files["labels"]),
        registration_shift=tuple(int(v) for v in shift),
    )


def load_dataset(dataset_dir, split: Optional[str] = None):
    """Load samples by split; returns a dict of lists, or one list for a split."""
    manifest = read_manifest(dataset_dir)
    if split is not None and split not in SPLITS:
        raise DataError(f"unknown split {split!r}")
    wanted = SPLITS if split is None else (split,)
    out = {name: [] for name in wanted}
    for entry in manifest["samples"]:
        name = entry.get("split")
        if name in out:
            out[name].append(load_sample(dataset_dir, entry))
    return out[split] if split is not None else out
