"""Point cloud container and its ASCII file format.

File layout:
    line "FFUSION-PCD v1 <n>"
    n lines "x y z" with repr() floats (exact round-trip)
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ffusion.errors import DataError

PCD_MAGIC = "FFUSION-PCD v1"


@dataclass(eq=False)
class PointCloud:
    """N sensor-frame points, meters, float64, all finite."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.ascontiguousarray(np.asarray(self.points, dtype=np.float64))
        if pts.size == 0:
            pts = pts.reshape(0, 3)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise DataError(f"point cloud must be (n, 3), got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise DataError("point cloud contains non-finite coordinates")
        self.points = pts

    def __len__(self) -> int:
        return self.points.shape[0]

    @classmethod
    def empty(cls) -> "PointCloud":
        return cls(np.zeros((0, 3)))


def write_point_cloud(cloud: PointCloud, path) -> None:
    lines = [f"{PCD_MAGIC} {len(cloud)}"]
    for x, y, z in cloud.points:
        lines.append(f"{float(x)!r} {float(y)!r} {float(z)!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def read_point_cloud(path) -> PointCloud:
    text = Path(path).read_text(encoding="ascii")
    lines = text.splitlines()
    if not lines:
        raise DataError(f"empty point cloud file: {path}")
    head = lines[0].rsplit(" ", 1)
    if len(head) != 2 or head[0] != PCD_MAGIC:
        raise DataError(f"unsupported point cloud header: {lines[0]!r}")
    try:
        count = int(head[1])
    except ValueError as exc:
        raise DataError(f"bad point count in header: {lines[0]!r}") from exc
    body = lines[1:]
    if len(body) != count:
        raise DataError(f"point cloud lists {len(body)} points, header says {count}")
    if count == 0:
        return PointCloud.empty()
    try:
        pts = np.array([[float(v) for v in line.split()] for line in body])
    except ValueError as exc:
        raise DataError(f"malformed point line in {path}") from exc
    if pts.shape != (count, 3):
        raise DataError(f"point lines must hold 3 coordinates each in {path}")
    return PointCloud(pts)
