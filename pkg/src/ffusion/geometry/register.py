"""Depth-to-image registration for a declared sensor misalignment."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ffusion.errors import RegistrationError
from ffusion.geometry.depthmap import DepthMap


@dataclass(eq=False)
class RegisteredFrame:
    """An rgb image with a depth map aligned onto its pixel grid."""

    rgb: np.ndarray
    depth: DepthMap
    alignment_ok: bool


def translate_depth(depth: DepthMap, dx: int, dy: int) -> DepthMap:
    """Move depth content by dx columns and dy rows; vacated cells go missing."""
    dx, dy = int(dx), int(dy)
    height, width = depth.values.shape
    values = np.zeros((height, width))
    valid = np.zeros((height, width), dtype=bool)
    src_r0, src_r1 = max(0, -dy), min(height, height - dy)
    src_c0, src_c1 = max(0, -dx), min(width, width - dx)
    if src_r0 < src_r1 and src_c0 < src_c1:
        dst = (slice(src_r0 + dy, src_r1 + dy), slice(src_c0 + dx, src_c1 + dx))
        src = (slice(src_r0, src_r1), slice(src_c0, src_c1))
        values[dst] = depth.values[src]
        valid[dst] = depth.valid[src]
    return DepthMap(values, valid)


def register_depth_to_rgb(
    depth: DepthMap,
    rgb: np.ndarray,
    shift: tuple = (0, 0),
) -> RegisteredFrame:
    """Undo a declared (dx, dy) misregistration of the depth map.

    shift states how far the depth content sits from where it belongs, so
    registration translates by (-dx, -dy). Depth and image dimensions must
    agree; a mismatch is an error, not a degraded frame.
    """
    img = np.asarray(rgb, dtype=np.float64)
    if img.ndim != 3 or img.shape[2] != 3:
        raise RegistrationError(f"rgb must be (h, w, 3), got {img.shape}")
    if img.shape[:2] != depth.values.shape:
        raise RegistrationError(
            f"depth {depth.values.shape} does not match image {img.shape[:2]}"
        )
    dx, dy = int(shift[0]), int(shift[1])
    aligned = translate_depth(depth, -dx, -dy) if (dx or dy) else depth
    return RegisteredFrame(rgb=img, depth=aligned, alignment_ok=True)
