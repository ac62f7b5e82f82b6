"""Numpy convolution kernels: the portable fallback backend.

Each operation is lowered to a single large matrix product over an unrolled
(im2col) view, so BLAS sees one big GEMM instead of a batch of small ones.
Contracts match the compiled backend exactly: stride-1 cross-correlation on
pre-padded inputs.
"""
from __future__ import annotations

import numpy as np


def _cols1d(xp: np.ndarray, k: int) -> np.ndarray:
    """[Ci*K, B*Lo] unrolled view of the padded input."""
    b, ci, lp = xp.shape
    lo = lp - k + 1
    cols = np.empty((ci, k, b, lo), dtype=np.float64)
    for j in range(k):
        cols[:, j, :, :] = xp[:, :, j : j + lo].transpose(1, 0, 2)
    return cols.reshape(ci * k, b * lo)


def conv1d_forward(xp: np.ndarray, w: np.ndarray, bias: np.ndarray) -> np.ndarray:
    b, ci, lp = xp.shape
    co, _, k = w.shape
    lo = lp - k + 1
    flat = w.reshape(co, ci * k) @ _cols1d(xp, k)
    y = flat.reshape(co, b, lo).transpose(1, 0, 2).copy()
    y += bias[None, :, None]
    return y


def conv1d_backward_x(gy: np.ndarray, w: np.ndarray, lp: int) -> np.ndarray:
    b, co, lo = gy.shape
    _, ci, k = w.shape
    gy_flat = gy.transpose(1, 0, 2).reshape(co, b * lo)
    cols = (w.reshape(co, ci * k).T @ gy_flat).reshape(ci, k, b, lo)
    gxp = np.zeros((b, ci, lp), dtype=np.float64)
    for j in range(k):
        gxp[:, :, j : j + lo] += cols[:, j].transpose(1, 0, 2)
    return gxp


def conv1d_backward_w(gy: np.ndarray, xp: np.ndarray, k: int) -> np.ndarray:
    b, co, lo = gy.shape
    _, ci, _ = xp.shape
    gy_flat = gy.transpose(1, 0, 2).reshape(co, b * lo)
    return (gy_flat @ _cols1d(xp, k).T).reshape(co, ci, k)


def _cols2d(xp: np.ndarray, kh: int, kw: int) -> np.ndarray:
    """[Ci*Kh*Kw, B*Ho*Wo] unrolled view of the padded input."""
    b, ci, hp, wp = xp.shape
    ho = hp - kh + 1
    wo = wp - kw + 1
    cols = np.empty((ci, kh, kw, b, ho, wo), dtype=np.float64)
    for r in range(kh):
        for c in range(kw):
            cols[:, r, c] = xp[:, :, r : r + ho, c : c + wo].transpose(1, 0, 2, 3)
    return cols.reshape(ci * kh * kw, b * ho * wo)


def conv2d_forward(xp: np.ndarray, w: np.ndarray, bias: np.ndarray) -> np.ndarray:
    b, ci, hp, wp = xp.shape
    co, _, kh, kw = w.shape
    ho = hp - kh + 1
    wo = wp - kw + 1
    flat = w.reshape(co, ci * kh * kw) @ _cols2d(xp, kh, kw)
    y = flat.reshape(co, b, ho, wo).transpose(1, 0, 2, 3).copy()
    y += bias[None, :, None, None]
    return y


def conv2d_backward_x(gy: np.ndarray, w: np.ndarray, hp: int, wp: int) -> np.ndarray:
    b, co, ho, wo = gy.shape
    _, ci, kh, kw = w.shape
    gy_flat = gy.transpose(1, 0, 2, 3).reshape(co, b * ho * wo)
    cols = (w.reshape(co, ci * kh * kw).T @ gy_flat).reshape(ci, kh, kw, b, ho, wo)
    gxp = np.zeros((b, ci, hp, wp), dtype=np.float64)
    for r in range(kh):
        for c in range(kw):
            gxp[:, :, r : r + ho, c : c + wo] += cols[:, r, c].transpose(1, 0, 2, 3)
    return gxp


def conv2d_backward_w(gy: np.ndarray, xp: np.ndarray, kh: int, kw: int) -> np.ndarray:
    b, co, ho, wo = gy.shape
    _, ci, _, _ = xp.shape
    gy_flat = gy.transpose(1, 0, 2, 3).reshape(co, b * ho * wo)
    return (gy_flat @ _cols2d(xp, kh, kw).T).reshape(co, ci, kh, kw)
