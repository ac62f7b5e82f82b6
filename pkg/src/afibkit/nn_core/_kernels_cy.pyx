# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled convolution kernels.

Same contracts as the numpy backend: stride-1 cross-correlation on inputs
that are already zero-padded. Loops are ordered so the innermost index walks
contiguous memory; parallel regions partition their output, so results are
bit-identical regardless of thread count.
"""
import numpy as np

cimport numpy as cnp
from cython.parallel cimport prange

cnp.import_array()


def conv1d_forward(double[:, :, ::1] xp, double[:, :, ::1] w, double[::1] bias):
    cdef Py_ssize_t B = xp.shape[0], Ci = xp.shape[1], Lp = xp.shape[2]
    cdef Py_ssize_t Co = w.shape[0], K = w.shape[2]
    cdef Py_ssize_t Lo = Lp - K + 1
    out_arr = np.empty((B, Co, Lo), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t b, co, ci, k, t
    cdef double wv, bv
    for b in prange(B, nogil=True, schedule='static'):
        for co in range(Co):
            bv = bias[co]
            for t in range(Lo):
                out[b, co, t] = bv
            for ci in range(Ci):
                for k in range(K):
                    wv = w[co, ci, k]
                    for t in range(Lo):
                        out[b, co, t] += wv * xp[b, ci, t + k]
    return out_arr


def conv1d_backward_x(double[:, :, ::1] gy, double[:, :, ::1] w, Py_ssize_t Lp):
    cdef Py_ssize_t B = gy.shape[0], Co = gy.shape[1], Lo = gy.shape[2]
    cdef Py_ssize_t Ci = w.shape[1], K = w.shape[2]
    gx_arr = np.zeros((B, Ci, Lp), dtype=np.float64)
    cdef double[:, :, ::1] gx = gx_arr
    cdef Py_ssize_t b, co, ci, k, t
    cdef double wv
    for b in prange(B, nogil=True, schedule='static'):
        for co in range(Co):
            for ci in range(Ci):
                for k in range(K):
                    wv = w[co, ci, k]
                    for t in range(Lo):
                        gx[b, ci, t + k] += wv * gy[b, co, t]
    return gx_arr


def conv1d_backward_w(double[:, :, ::1] gy, double[:, :, ::1] xp, Py_ssize_t K):
    cdef Py_ssize_t B = gy.shape[0], Co = gy.shape[1], Lo = gy.shape[2]
    cdef Py_ssize_t Ci = xp.shape[1]
    gw_arr = np.zeros((Co, Ci, K), dtype=np.float64)
    cdef double[:, :, ::1] gw = gw_arr
    cdef Py_ssize_t b, co, ci, k, t
    cdef double acc
    for co in prange(Co, nogil=True, schedule='static'):
        for ci in range(Ci):
            for k in range(K):
                acc = 0.0
                for b in range(B):
                    for t in range(Lo):
                        acc = acc + gy[b, co, t] * xp[b, ci, t + k]
                gw[co, ci, k] = acc
    return gw_arr


def conv2d_forward(double[:, :, :, ::1] xp, double[:, :, :, ::1] w, double[::1] bias):
    cdef Py_ssize_t B = xp.shape[0], Ci = xp.shape[1], Hp = xp.shape[2], Wp = xp.shape[3]
    cdef Py_ssize_t Co = w.shape[0], Kh = w.shape[2], Kw = w.shape[3]
    cdef Py_ssize_t Ho = Hp - Kh + 1, Wo = Wp - Kw + 1
    out_arr = np.empty((B, Co, Ho, Wo), dtype=np.float64)
    cdef double[:, :, :, ::1] out = out_arr
    cdef Py_ssize_t b, co, ci, kh, kw, i, j
    cdef double wv, bv
    for b in prange(B, nogil=True, schedule='static'):
        for co in range(Co):
            bv = bias[co]
            for i in range(Ho):
                for j in range(Wo):
                    out[b, co, i, j] = bv
            for ci in range(Ci):
                for kh in range(Kh):
                    for kw in range(Kw):
                        wv = w[co, ci, kh, kw]
                        for i in range(Ho):
                            for j in range(Wo):
                                out[b, co, i, j] += wv * xp[b, ci, i + kh, j + kw]
    return out_arr


def conv2d_backward_x(double[:, :, :, ::1] gy, double[:, :, :, ::1] w,
                      Py_ssize_t Hp, Py_ssize_t Wp):
    cdef Py_ssize_t B = gy.shape[0], Co = gy.shape[1], Ho = gy.shape[2], Wo = gy.shape[3]
    cdef Py_ssize_t Ci = w.shape[1], Kh = w.shape[2], Kw = w.shape[3]
    gx_arr = np.zeros((B, Ci, Hp, Wp), dtype=np.float64)
    cdef double[:, :, :, ::1] gx = gx_arr
    cdef Py_ssize_t b, co, ci, kh, kw, i, j
    cdef double wv
    for b in prange(B, nogil=True, schedule='static'):
        for co in range(Co):
            for ci in range(Ci):
                for kh in range(Kh):
                    for kw in range(Kw):
                        wv = w[co, ci, kh, kw]
                        for i in range(Ho):
                            for j in range(Wo):
                                gx[b, ci, i + kh, j + kw] += wv * gy[b, co, i, j]
    return gx_arr


def conv2d_backward_w(double[:, :, :, ::1] gy, double[:, :, :, ::1] xp,
                      Py_ssize_t Kh, Py_ssize_t Kw):
    cdef Py_ssize_t B = gy.shape[0], Co = gy.shape[1], Ho = gy.shape[2], Wo = gy.shape[3]
    cdef Py_ssize_t Ci = xp.shape[1]
    gw_arr = np.zeros((Co, Ci, Kh, Kw), dtype=np.float64)
    cdef double[:, :, :, ::1] gw = gw_arr
    cdef Py_ssize_t b, co, ci, kh, kw, i, j
    cdef double acc
    for co in prange(Co, nogil=True, schedule='static'):
        for ci in range(Ci):
            for kh in range(Kh):
                for kw in range(Kw):
                    acc = 0.0
                    for b in range(B):
                        for i in range(Ho):
                            for j in range(Wo):
                                acc = acc + gy[b, co, i, j] * xp[b, ci, i + kh, j + kw]
                    gw[co, ci, kh, kw] = acc
    return gw_arr
