"""Sequential network container with binary weight serialization.

Weight files: magic b"AFIBNNW\\x00", a version byte, an entry manifest
(name, shape per tensor), then each tensor's raw little-endian float64 data
in manifest order. Batchnorm running statistics are stored alongside the
trainable parameters so a loaded network evaluates identically.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..errors import ShapeMismatch
from .layers import Layer, Param, Sigmoid

WEIGHTS_MAGIC = b"AFIBNNW\x00"
WEIGHTS_VERSION = 1


def _check_finite(x: np.ndarray, where: str) -> None:
    # min/max scans instead of isfinite().all(): NaN poisons both reductions
    # and +-inf lands in one of them, with no boolean temporary
    if x.size and not (np.isfinite(x.min()) and np.isfinite(x.max())):
        raise ValueError(f"non-finite values entering {where}")


class Network:
    def __init__(self, layers: list[Layer], check_finite: bool = True):
        self.layers = layers
        self.check_finite = check_finite

    def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        for i, layer in enumerate(self.layers):
            if self.check_finite:
                _check_finite(x, f"layer {i} ({layer.kind})")
            x = layer.forward(x, training=training)
        if self.check_finite:
            _check_finite(x, "network output")
        return x

    def logits(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        """Forward pass that stops before a trailing sigmoid, for use with the
        numerically stable logit-space loss."""
        x = np.asarray(x, dtype=np.float64)
        body = self.layers[:-1] if isinstance(self.layers[-1], Sigmoid) else self.layers
        for i, layer in enumerate(body):
            if self.check_finite:
                _check_finite(x, f"layer {i} ({layer.kind})")
            x = layer.forward(x, training=training)
        return x

    def backward(self, gy: np.ndarray) -> np.ndarray:
        for layer in reversed(self.layers):
            gy = layer.backward(gy)
        return gy

    def backward_from_logits(self, gz: np.ndarray) -> np.ndarray:
        body = self.layers[:-1] if isinstance(self.layers[-1], Sigmoid) else self.layers
        for layer in reversed(body):
            gz = layer.backward(gz)
        return gz

    def parameters(self) -> list[Param]:
        return [p for layer in self.layers for p in layer.params()]

    def _entries(self) -> list[tuple[str, np.ndarray]]:
        out = []
        for i, layer in enumerate(self.layers):
            for p in layer.params():
                out.append((f"{i}.{layer.kind}.{p.name}", p.value))
            for name, buf in layer.buffers():
                out.append((f"{i}.{layer.kind}.{name}", buf))
        return out

    def save_weights(self, path: str | Path) -> None:
        entries = self._entries()
        with open(path, "wb") as fh:
            fh.write(WEIGHTS_MAGIC)
            fh.write(struct.pack("<BxH", WEIGHTS_VERSION, len(entries)))
            for name, value in entries:
                encoded = name.encode()
                fh.write(struct.pack("<H", len(encoded)))
                fh.write(encoded)
                fh.write(struct.pack("<B", value.ndim))
                fh.write(struct.pack(f"<{value.ndim}I", *value.shape))
            for _, value in entries:
                fh.write(np.ascontiguousarray(value, dtype="<f8").tobytes())

    def load_weights(self, path: str | Path) -> None:
        blob = Path(path).read_bytes()
        if blob[:8] != WEIGHTS_MAGIC:
            raise ValueError(f"not a weights file: bad magic {blob[:8]!r}")
        version, count = struct.unpack_from("<BxH", blob, 8)
        if version != WEIGHTS_VERSION:
            raise ValueError(f"unsupported weights version {version}")
        offset = 12
        manifest = []
        for _ in range(count):
            (name_len,) = struct.unpack_from("<H", blob, offset)
            offset += 2
            name = blob[offset : offset + name_len].decode()
            offset += name_len
            (ndim,) = struct.unpack_from("<B", blob, offset)
            offset += 1
            shape = struct.unpack_from(f"<{ndim}I", blob, offset)
            offset += 4 * ndim
            manifest.append((name, shape))

        entries = self._entries()
        if [m[0] for m in manifest] != [e[0] for e in entries]:
            raise ShapeMismatch("weights file does not match this architecture")
        for (name, shape), (_, value) in zip(manifest, entries):
            if tuple(shape) != value.shape:
                raise ShapeMismatch(f"{name}: file shape {shape} vs model {value.shape}")
            n = int(np.prod(shape))
            data = np.frombuffer(blob, dtype="<f8", count=n, offset=offset).reshape(shape)
            offset += 8 * n
            value[...] = data
