"""Depth map container with explicit validity and its ASCII file format.

Valid cells hold strictly positive, finite depths in meters; invalid cells
hold exactly 0.0 and are flagged in the mask. The file format is:
    line "FFUSION-DEPTH v1 <width> <height>"
    height lines of width entries, repr() floats, missing written as -1
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ffusion.errors import DataError

DEPTH_MAGIC = "FFUSION-DEPTH v1"


@dataclass(eq=False)
class DepthMap:
    values: np.ndarray
    valid: np.ndarray

    def __post_init__(self):
        vals = np.ascontiguousarray(np.asarray(self.values, dtype=np.float64))
        mask = np.ascontiguousarray(np.asarray(self.valid, dtype=bool))
        if vals.ndim != 2:
            raise DataError(f"depth map must be 2-d, got shape {vals.shape}")
        if mask.shape != vals.shape:
            raise DataError(f"validity mask {mask.shape} does not match values {vals.shape}")
        picked = vals[mask]
        if picked.size and not (np.all(np.isfinite(picked)) and np.all(picked > 0.0)):
            raise DataError("valid depth cells must be finite and strictly positive")
        if not np.all(vals[~mask] == 0.0):
            raise DataError("invalid depth cells must hold exactly 0.0")
        self.values = vals
        self.valid = mask

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def valid_count(self) -> int:
        return int(self.valid.sum())

    @classmethod
    def empty(cls, height: int, width: int) -> "DepthMap":
        return cls(np.zeros((height, width)), np.zeros((height, width), dtype=bool))

    @classmethod
    def from_values(cls, values: np.ndarray) -> "DepthMap":
        """Build from an array where non-positive or non-finite cells are missing."""
        vals = np.asarray(values, dtype=np.float64)
        mask = np.isfinite(vals) & (vals > 0.0)
        clean = np.where(mask, vals, 0.0)
        return cls(clean, mask)


def write_depth(depth: DepthMap, path) -> None:
    lines = [f"{DEPTH_MAGIC} {depth.width} {depth.height}"]
    for r in range(depth.height):
        row = [
            repr(float(depth.values[r, c])) if depth.valid[r, c] else "-1"
            for c in range(depth.width)
        ]
        lines.append(" ".join(row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def read_depth(path) -> DepthMap:
    lines = Path(path).read_text(encoding="ascii").splitlines()
    if not lines:
        raise DataError(f"empty depth file: {path}")
    fields = lines[0].split()
    if len(fields) != 4 or " ".join(fields[:2]) != DEPTH_MAGIC:
        raise DataError(f"unsupported depth header: {lines[0]!r}")
    try:
        width, height = int(fields[2]), int(fields[3])
    except ValueError as exc:
        raise DataError(f"bad dimensions in depth header: {lines[0]!r}") from exc
    body = lines[1:]
    if len(body) != height:
        raise DataError(f"depth file has {len(body)} rows, header says {height}")
    values = np.zeros((height, width))
    valid = np.zeros((height, width), dtype=bool)
    for r, line in enumerate(body):
        cells = line.split()
        if len(cells) != width:
            raise DataError(f"depth row {r} has {len(cells)} entries, expected {width}")
        for c, cell in enumerate(cells):
            try:
                v = float(cell)
            except ValueError as exc:
                raise DataError(f"malformed depth entry {cell!r} at ({r}, {c})") from exc
            if v == -1.0:
                continue
            values[r, c] = v
            valid[r, c] = True
    return DepthMap(values, valid)
