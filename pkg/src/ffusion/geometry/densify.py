"""Inverse-distance-weighted densification of sparse depth maps."""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from ffusion.geometry.depthmap import DepthMap

DEFAULT_RADIUS = 6
DEFAULT_NEIGHBORS = 8
DISTANCE_REG = 1e-6


@lru_cache(maxsize=None)
def _neighbor_offsets(radius: int) -> tuple:
    """Integer offsets within the radius, sorted by (distance, row, col).

    The fixed ordering makes neighbor selection fully deterministic: ties in
    distance always resolve by row offset, then column offset.
    """
    offsets = []
    for dr in range(-radius, radius + 1):
        for dc in range(-radius, radius + 1):
            if dr == 0 and dc == 0:
                continue
            dist = float(np.hypot(dr, dc))
            if dist <= radius:
                offsets.append((dist, dr, dc))
    offsets.sort()
    return tuple(offsets)


def densify_depth(
    sparse: DepthMap,
    radius: int = DEFAULT_RADIUS,
    k: int = DEFAULT_NEIGHBORS,
) -> DepthMap:
    """Fill missing cells from their k nearest valid neighbors.

    Each missing cell takes the inverse-distance-weighted mean of up to k
    valid cells within the radius, weights 1/(d + 1e-6). Cells with no valid
    neighbor in range stay missing; originally valid cells pass through
    untouched. Filled values are clamped to the min/max of the contributing
    neighbors: the weighted mean is a convex combination, so the clamp only
    removes float rounding dust (a single neighbor fills exactly its value).
    """
    if radius < 1:
        raise ValueError(f"radius must be at least 1, got {radius}")
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    height, width = sparse.values.shape
    values, valid = sparse.values, sparse.valid
    count = np.zeros((height, width), dtype=np.int64)
    weight_sum = np.zeros((height, width))
    weighted_value = np.zeros((height, width))
    low = np.full((height, width), np.inf)
    high = np.full((height, width), -np.inf)
    hole = ~valid

    for dist, dr, dc in _neighbor_offsets(radius):
        # Target window that has a source pixel at offset (dr, dc) in bounds.
        t_r0, t_r1 = max(0, -dr), min(height, height - dr)
        t_c0, t_c1 = max(0, -dc), min(width, width - dc)
        if t_r0 >= t_r1 or t_c0 >= t_c1:
            continue
        target = (slice(t_r0, t_r1), slice(t_c0, t_c1))
        source = (slice(t_r0 + dr, t_r1 + dr), slice(t_c0 + dc, t_c1 + dc))
        accept = hole[target] & valid[source] & (count[target] < k)
        if not accept.any():
            continue
        w = 1.0 / (dist + DISTANCE_REG)
        src_vals = values[source]
        count[target] += accept
        weight_sum[target] += np.where(accept, w, 0.0)
        weighted_value[target] += np.where(accept, w * src_vals, 0.0)
        low[target] = np.where(accept & (src_vals < low[target]), src_vals, low[target])
        high[target] = np.where(accept & (src_vals > high[target]), src_vals, high[target])

    filled = count > 0
    out_values = values.copy()
    out_valid = valid.copy()
    if filled.any():
        est = weighted_value[filled] / weight_sum[filled]
        est = np.clip(est, low[filled], high[filled])
        out_values[filled] = est
        out_valid[filled] = True
    return DepthMap(out_values, out_valid)
