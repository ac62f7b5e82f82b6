"""Convolution kernel dispatch: compiled extension when available, numpy
BLAS fallback otherwise.

Selection happens once at import. `AFIBKIT_BACKEND=numpy` (or the legacy
`AFIBKIT_PURE_PY=1`) forces the fallback; `AFIBKIT_BACKEND=cython` makes a
missing extension a hard error instead of a silent downgrade. Each backend
is bit-deterministic run to run; the two backends agree to float64 rounding,
not bit for bit, because their summation orders differ.

In auto mode with the extension built, dispatch is per shape: the compiled
loops win while the spatial extent is long, but once pooling has shrunk it
to a handful of positions the BLAS matmul path is faster (see
benchmarks/bench_kernels.py), so short-spatial calls fall back. Routing
depends only on shapes, never on values, so runs stay reproducible.
"""
from __future__ import annotations

import os

import numpy as np

from ..errors import ShapeMismatch
from . import _kernels_py

_requested = os.environ.get("AFIBKIT_BACKEND", "auto").lower()
if os.environ.get("AFIBKIT_PURE_PY") == "1":
    _requested = "numpy"

if _requested not in ("auto", "cython", "numpy"):
    raise ValueError(f"AFIBKIT_BACKEND must be auto, cython or numpy, not {_requested!r}")

_impl = _kernels_py
BACKEND = "numpy"
if _requested in ("auto", "cython"):
    try:
        from . import _kernels_cy as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        if _requested == "cython":
            raise
        _impl = _kernels_py


def get_backend(name: str):
    """Explicit backend module lookup; used by the parity tests and benchmark."""
    if name == "numpy":
        return _kernels_py
    if name == "cython":
        from . import _kernels_cy

        return _kernels_cy
    raise ValueError(f"unknown backend {name!r}")


# Crossover from benchmarks/bench_kernels.py: the compiled loops win only
# while the spatial extent is long relative to the unrolled channel depth
# (early low-channel blocks); everywhere else one big BLAS GEMM is faster.
_HYBRID = BACKEND == "cython" and _requested == "auto"


def _route(spatial_out: int, inner_dim: int):
    if _HYBRID and spatial_out >= 256 and spatial_out >= 4 * inner_dim:
        return _impl
    return _kernels_py if _HYBRID else _impl


def _pad1d(x: np.ndarray, pad: int) -> np.ndarray:
    if pad == 0:
        return np.ascontiguousarray(x, dtype=np.float64)
    return np.pad(x, ((0, 0), (0, 0), (pad, pad)))


def _pad2d(x: np.ndarray, pad_h: int, pad_w: int) -> np.ndarray:
    if pad_h == 0 and pad_w == 0:
        return np.ascontiguousarray(x, dtype=np.float64)
    return np.pad(x, ((0, 0), (0, 0), (pad_h, pad_h), (pad_w, pad_w)))


def conv1d(x: np.ndarray, w: np.ndarray, bias: np.ndarray, pad: int, impl=None) -> np.ndarray:
    if impl is None:
        impl = _route(x.shape[2] + 2 * pad - w.shape[2] + 1, w.shape[1] * w.shape[2])
    if x.ndim != 3 or w.ndim != 3 or x.shape[1] != w.shape[1]:
        raise ShapeMismatch(f"conv1d: x {x.shape} vs w {w.shape}")
    xp = _pad1d(x, pad)
    if xp.shape[2] < w.shape[2]:
        raise ShapeMismatch(f"kernel {w.shape[2]} longer than padded input {xp.shape[2]}")
    return np.asarray(
        impl.conv1d_forward(
            xp, np.ascontiguousarray(w, dtype=np.float64), np.ascontiguousarray(bias, dtype=np.float64)
        )
    )


def conv1d_grads(
    x: np.ndarray, w: np.ndarray, gy: np.ndarray, pad: int, impl=None
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if impl is None:
        impl = _route(x.shape[2] + 2 * pad - w.shape[2] + 1, w.shape[1] * w.shape[2])
    xp = _pad1d(x, pad)
    gy = np.ascontiguousarray(gy, dtype=np.float64)
    wc = np.ascontiguousarray(w, dtype=np.float64)
    gxp = np.asarray(impl.conv1d_backward_x(gy, wc, xp.shape[2]))
    gw = np.asarray(impl.conv1d_backward_w(gy, xp, w.shape[2]))
    gb = gy.sum(axis=(0, 2))
    gx = gxp[:, :, pad : xp.shape[2] - pad] if pad else gxp
    return np.ascontiguousarray(gx), gw, gb


def conv2d(
    x: np.ndarray, w: np.ndarray, bias: np.ndarray, pad_h: int, pad_w: int, impl=None
) -> np.ndarray:
    if impl is None:
        ho = x.shape[2] + 2 * pad_h - w.shape[2] + 1
        wo = x.shape[3] + 2 * pad_w - w.shape[3] + 1
        impl = _route(ho * wo, w.shape[1] * w.shape[2] * w.shape[3])
    if x.ndim != 4 or w.ndim != 4 or x.shape[1] != w.shape[1]:
        raise ShapeMismatch(f"conv2d: x {x.shape} vs w {w.shape}")
    xp = _pad2d(x, pad_h, pad_w)
    if xp.shape[2] < w.shape[2] or xp.shape[3] < w.shape[3]:
        raise ShapeMismatch(f"kernel {w.shape[2:]} larger than padded input {xp.shape[2:]}")
    return np.asarray(
        impl.conv2d_forward(
            xp, np.ascontiguousarray(w, dtype=np.float64), np.ascontiguousarray(bias, dtype=np.float64)
        )
    )


def conv2d_grads(
    x: np.ndarray, w: np.ndarray, gy: np.ndarray, pad_h: int, pad_w: int, impl=None
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if impl is None:
        ho = x.shape[2] + 2 * pad_h - w.shape[2] + 1
        wo = x.shape[3] + 2 * pad_w - w.shape[3] + 1
        impl = _route(ho * wo, w.shape[1] * w.shape[2] * w.shape[3])
    xp = _pad2d(x, pad_h, pad_w)
    gy = np.ascontiguousarray(gy, dtype=np.float64)
    wc = np.ascontiguousarray(w, dtype=np.float64)
    gxp = np.asarray(impl.conv2d_backward_x(gy, wc, xp.shape[2], xp.shape[3]))
    gw = np.asarray(impl.conv2d_backward_w(gy, xp, w.shape[2], w.shape[3]))
    gb = gy.sum(axis=(0, 2, 3))
    gx = gxp
    if pad_h:
        gx = gx[:, :, pad_h : xp.shape[2] - pad_h, :]
    if pad_w:
        gx = gx[:, :, :, pad_w : xp.shape[3] - pad_w]
    return np.ascontiguousarray(gx), gw, gb
