"""Versioned binary checkpoint format for parameter stores.

Layout (bytes):
    line "FFUSION-CKPT v1"        magic and version
    line "<count>"                number of parameters
    count lines "<path> <d0> ..." dotted path then shape, sorted by path
    line "end"                    header terminator
    raw data                      little-endian float64, concatenated in
                                  header order, row-major

Paths contain no whitespace. A scalar parameter lists no dimensions.
Round-trips are bit-exact.
"""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Union

import numpy as np

from ffusion.autodiff.params import ParamStore
from ffusion.errors import CheckpointError

MAGIC = "FFUSION-CKPT v1"


def save_checkpoint(source: Union[ParamStore, Mapping[str, np.ndarray]], path) -> None:
    """Write parameters to a checkpoint file, sorted by path."""
    if isinstance(source, ParamStore):
        entries = [(p, t.data) for p, t in source.items()]
    else:
        entries = [(p, np.asarray(source[p], dtype=np.float64)) for p in sorted(source)]
    for name, _ in entries:
        if any(ch.isspace() for ch in name):
            raise CheckpointError(f"parameter path contains whitespace: {name!r}")
    header = [MAGIC, str(len(entries))]
    for name, arr in entries:
        dims = " ".join(str(d) for d in arr.shape)
        header.append(f"{name} {dims}".rstrip())
    header.append("end")
    blob = b"".join(np.ascontiguousarray(arr, dtype="<f8").tobytes() for _, arr in entries)
    Path(path).write_bytes("\n".join(header).encode("ascii") + b"\n" + blob)


def load_checkpoint(path) -> dict:
    """Read a checkpoint back into {path: float64 array}."""
    raw = Path(path).read_bytes()
    head, sep, rest = raw.partition(b"\nend\n")
    if not sep:
        raise CheckpointError("checkpoint header is missing its end marker")
    lines = head.decode("ascii", errors="replace").split("\n")
    if not lines or lines[0] != MAGIC:
        raise CheckpointError(f"unsupported checkpoint format: {lines[0][:40]!r}")
    try:
        count = int(lines[1])
    except (IndexError, ValueError) as exc:
        raise CheckpointError("checkpoint is missing its parameter count") from exc
    specs = lines[2:]
    if len(specs) != count:
        raise CheckpointError(f"checkpoint lists {len(specs)} parameters, expected {count}")
    params: dict = {}
    offset = 0
    for line in specs:
        fields = line.split()
        if not fields:
            raise CheckpointError("empty parameter line in checkpoint header")
        name = fields[0]
        if name in params:
            raise CheckpointError(f"duplicate parameter path: {name!r}")
        try:
            shape = tuple(int(d) for d in fields[1:])
        except ValueError as exc:
            raise CheckpointError(f"bad shape on parameter line {line!r}") from exc
        size = int(np.prod(shape, dtype=np.int64)) if shape else 1
        nbytes = size * 8
        chunk = rest[offset:offset + nbytes]
        if len(chunk) != nbytes:
            raise CheckpointError(f"checkpoint data truncated at parameter {name!r}")
        params[name] = np.frombuffer(chunk, dtype="<f8").reshape(shape).astype(np.float64)
        offset += nbytes
    if offset != len(rest):
        raise CheckpointError(f"checkpoint holds {len(rest) - offset} unexpected trailing bytes")
    return params
