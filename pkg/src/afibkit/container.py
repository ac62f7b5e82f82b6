"""Binary container for labeled segments and spectrograms.

Layout (all little-endian):

    bytes 0..7    magic b"AFIBKIT\\x00"
    byte  8       container version (1)
    byte  9       item ndim (1 = segments, 2 = spectrograms)
    bytes 10..11  reserved (zero)
    bytes 12..15  uint32 item count

followed by one block per item: a label byte, ndim uint32 dimensions, then
the float64 values in row-major order. A sidecar `<path>.manifest.json`
carries provenance (records, config, seed, per-item sources).
"""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import MalformedContainer

MAGIC = b"AFIBKIT\x00"
VERSION = 1
_HEADER = struct.Struct("<8sBBHI")


def write_container(path: str | Path, items: list[tuple[int, np.ndarray]], manifest: dict) -> None:
    """Write (label, values) items plus the sidecar manifest."""
    path = Path(path)
    if not items:
        raise ValueError("refusing to write an empty container")
    ndim = items[0][1].ndim
    if ndim not in (1, 2):
        raise ValueError(f"items must be 1-D or 2-D, got {ndim}-D")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, ndim, 0, len(items)))
        for label, values in items:
            if values.ndim != ndim:
                raise ValueError("mixed item dimensionality")
            if label not in (0, 1):
                raise ValueError(f"label must be 0 or 1, got {label}")
            fh.write(struct.pack("<B", label))
            fh.write(struct.pack(f"<{ndim}I", *values.shape))
            fh.write(np.ascontiguousarray(values, dtype="<f8").tobytes())
    manifest_path = Path(str(path) + ".manifest.json")
    manifest_path.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")


def read_container(path: str | Path) -> tuple[list[tuple[int, np.ndarray]], dict]:
    """Read items and the sidecar manifest (empty dict when absent)."""
    path = Path(path)
    blob = path.read_bytes()
    if len(blob) < _HEADER.size:
        raise MalformedContainer("file shorter than header")
    magic, version, ndim, _, count = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise MalformedContainer(f"bad magic {magic!r}")
    if version != VERSION:
        raise MalformedContainer(f"unsupported container version {version}")
    if ndim not in (1, 2):
        raise MalformedContainer(f"bad item ndim {ndim}")

    items = []
    offset = _HEADER.size
    for _ in range(count):
        if offset + 1 + 4 * ndim > len(blob):
            raise MalformedContainer("truncated item header")
        label = blob[offset]
        offset += 1
        shape = struct.unpack_from(f"<{ndim}I", blob, offset)
        offset += 4 * ndim
        n_values = int(np.prod(shape))
        end = offset + 8 * n_values
        if end > len(blob):
            raise MalformedContainer("truncated item payload")
        values = np.frombuffer(blob, dtype="<f8", count=n_values, offset=offset).reshape(shape)
        items.append((int(label), values.copy()))
        offset = end
    if offset != len(blob):
        raise MalformedContainer(f"{len(blob) - offset} trailing bytes after last item")

    manifest_path = Path(str(path) + ".manifest.json")
    manifest = json.loads(manifest_path.read_text()) if manifest_path.exists() else {}
    return items, manifest
