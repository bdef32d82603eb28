"""Sample-to-feature preparation: geometry, health checks, tokenization.

The depth path reconstructs a dense map from the point cloud (project,
apply the calibrated registration shift, densify) and feeds value/validity
channels; the camera path sanitizes non-finite pixels after health triage;
the text path tokenizes against the fixed vocabulary. Failed modalities get
zero placeholder features and availability False.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from ffusion.errors import DataError
from ffusion.geometry import densify_depth, project_point_cloud, translate_depth
from ffusion.geometry.calibration import Intrinsics
from ffusion.model.config import ModelConfig
from ffusion.model.encoders import (
    CAMERA_CHANNELS,
    DEPTH_CHANNELS,
    IMAGE_SIDE,
    MODALITIES,
    patchify,
)
from ffusion.model.health import ModalityHealth, camera_health, depth_health, text_health
from ffusion.model.vocab import Vocab
from ffusion.scene.dataset import Sample
from ffusion.scene.render import DEFAULT_INTRINSICS

DEPTH_SCALE = 20.0  # scenes top out below 20 m; normalizes depth to ~[0, 1]
DENSIFY_RADIUS = 6
DENSIFY_NEIGHBORS = 8


@dataclass
class FeatureSet:
    """Per-sample encoder inputs plus health and label bookkeeping."""

    sample_id: str
    camera: np.ndarray  # (T_cam, P*P*3) patch matrix
    depth: np.ndarray  # (T_cam, P*P*2) patch matrix
    text: np.ndarray  # (T_text,) token ids
    health: Dict[str, ModalityHealth]
    command_id: int
    seg_labels: np.ndarray

    @property
    def availability(self) -> Tuple[bool, bool, bool]:
        return tuple(self.health[m].available for m in MODALITIES)


def prepare_features(sample: Sample, config: ModelConfig, vocab: Vocab,
                     intrinsics: Optional[Intrinsics] = None) -> FeatureSet:
    intr = DEFAULT_INTRINSICS if intrinsics is None else intrinsics
    patch = config.patch
    tokens = (IMAGE_SIDE // patch) ** 2

    rgb = np.asarray(sample.rgb, dtype=np.float64)
    cam_health = camera_health(rgb)
    if cam_health.available:
        clean = np.where(np.isfinite(rgb), rgb, 0.0)
        cam_patches = patchify(clean, patch)
    else:
        cam_patches = np.zeros((tokens, patch * patch * CAMERA_CHANNELS))

    sparse = project_point_cloud(sample.cloud, intr)
    dx, dy = (int(v) for v in sample.registration_shift)
    if (dx, dy) != (0, 0):
        sparse = translate_depth(sparse, dx, dy)
    d_health = depth_health(sparse.values, sparse.valid)
    if d_health.available:
        dense = densify_depth(sparse, radius=DENSIFY_RADIUS, k=DENSIFY_NEIGHBORS)
        channels = np.stack(
            [dense.values / DEPTH_SCALE, dense.valid.astype(np.float64)], axis=-1
        )
        depth_patches = patchify(channels, patch)
    else:
        depth_patches = np.zeros((tokens, patch * patch * DEPTH_CHANNELS))

    t_health = text_health(sample.text)
    if t_health.available:
        ids = vocab.encode(sample.text, config.text_len)
    else:
        ids = np.zeros(config.text_len, dtype=np.int64)

    return FeatureSet(
        sample_id=sample.sample_id,
        camera=cam_patches,
        depth=depth_patches,
        text=ids,
        health={"camera": cam_health, "depth": d_health, "text": t_health},
        command_id=sample.command_id,
        seg_labels=np.asarray(sample.seg_labels, dtype=np.int64),
    )


@dataclass
class FeatureBatch:
    """Stacked features for samples sharing one availability pattern."""

    camera: np.ndarray  # (B, T_cam, P*P*3)
    depth: np.ndarray  # (B, T_cam, P*P*2)
    text: np.ndarray  # (B, T_text)
    command_ids: np.ndarray  # (B,)
    seg_labels: np.ndarray  # (B, 8, 8)
    availability: Tuple[bool, bool, bool]

    @property
    def size(self) -> int:
        return int(self.camera.shape[0])


def stack_features(features: Sequence[FeatureSet]) -> FeatureBatch:
    if not features:
        raise DataError("cannot stack an empty feature list")
    patterns = {f.availability for f in features}
    if len(patterns) != 1:
        raise DataError(f"mixed availability patterns in one batch: {sorted(patterns)}")
    return FeatureBatch(
        camera=np.stack([f.camera for f in features]),
        depth=np.stack([f.depth for f in features]),
        text=np.stack([f.text for f in features]),
        command_ids=np.asarray([f.command_id for f in features], dtype=np.int64),
        seg_labels=np.stack([f.seg_labels for f in features]),
        availability=patterns.pop(),
    )


def group_by_availability(features: Sequence[FeatureSet]) -> Dict[tuple, list]:
    """Indices of samples per availability pattern, insertion-ordered."""
    groups: Dict[tuple, list] = {}
    for i, f in enumerate(features):
        groups.setdefault(f.availability, []).append(i)
    return groups
