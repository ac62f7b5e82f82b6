"""Short-time Fourier spectrograms for the 2-D classifier.

The transform core is an iterative radix-2 decimation-in-time FFT operating
on the last axis, so a whole segment's frames are transformed in one call.
Power spectra are log-compressed and min-max scaled per spectrogram; raw ECG
power is heavy-tailed enough that a linear scale leaves the image dominated
by a handful of bins.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import NonPowerOfTwo, SegmentTooShort


@dataclass
class Spectrogram:
    values: np.ndarray        # [freq_bins, time_frames]
    bin_hz: float
    frame_stride_s: float


def _bit_reverse_indices(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    idx = np.arange(n, dtype=np.uint64)
    rev = np.zeros_like(idx)
    for _ in range(bits):
        rev = (rev << 1) | (idx & 1)
        idx >>= 1
    return rev.astype(np.intp)


def _fft_last_axis(x: np.ndarray) -> np.ndarray:
    """Radix-2 DIT transform along the last axis; length must be a power of two."""
    n = x.shape[-1]
    if n == 1:
        return x.astype(np.complex128)
    y = x[..., _bit_reverse_indices(n)].astype(np.complex128)
    size = 2
    while size <= n:
        half = size // 2
        twiddle = np.exp(-2j * np.pi * np.arange(half) / size)
        blocks = y.reshape(*y.shape[:-1], n // size, size)
        even = blocks[..., :half].copy()
        odd = blocks[..., half:] * twiddle
        blocks[..., :half] = even + odd
        blocks[..., half:] = even - odd
        size *= 2
    return y


def fft(x: np.ndarray) -> np.ndarray:
    """Discrete Fourier transform X[k] = sum_t x[t] e^(-2*pi*i*k*t/n)."""
    x = np.asarray(x)
    n = x.shape[-1]
    if n < 1 or n & (n - 1):
        raise NonPowerOfTwo(f"length {n} is not a power of two")
    return _fft_last_axis(x)


def inverse_fft(x: np.ndarray) -> np.ndarray:
    """Inverse transform via the conjugation identity; test support."""
    x = np.asarray(x)
    return np.conj(fft(np.conj(x))) / x.shape[-1]


def hann_window(n: int) -> np.ndarray:
    return 0.5 - 0.5 * np.cos(2 * np.pi * np.arange(n) / n)


def stft_power(
    samples: np.ndarray,
    sampling_hz: float,
    window: int = 128,
    hop: int = 64,
) -> Spectrogram:
    """Hann-windowed framewise power spectrum, one column per frame.

    Keeps bins k in [0, window/2); frame count is 1 + floor((L - window)/hop).
    """
    samples = np.asarray(samples, dtype=np.float64)
    if window < 2 or window & (window - 1):
        raise NonPowerOfTwo(f"window {window} is not a power of two")
    if samples.size < window:
        raise SegmentTooShort(f"segment of {samples.size} samples < window {window}")
    n_frames = 1 + (samples.size - window) // hop
    starts = np.arange(n_frames) * hop
    frames = np.stack([samples[s : s + window] for s in starts])
    frames = frames * hann_window(window)
    spectrum = _fft_last_axis(frames)
    power = np.abs(spectrum[:, : window // 2]) ** 2
    return Spectrogram(
        values=power.T.copy(),
        bin_hz=sampling_hz / window,
        frame_stride_s=hop / sampling_hz,
    )


def log_normalize(spec: Spectrogram) -> Spectrogram:
    """log(1 + v) then per-spectrogram min-max scaling to [0, 1]; a constant
    input (including all-zero) maps to all-zero."""
    v = np.log1p(spec.values)
    lo, hi = v.min(), v.max()
    if hi == lo:
        scaled = np.zeros_like(v)
    else:
        scaled = (v - lo) / (hi - lo)
    return Spectrogram(values=scaled, bin_hz=spec.bin_hz, frame_stride_s=spec.frame_stride_s)


def write_pgm(spec: Spectrogram, path: str | Path) -> None:
    """Dump a spectrogram as a binary PGM image (frequency rows, low bins at
    the bottom) for visual inspection."""
    v = np.clip(spec.values, 0.0, 1.0)
    img = np.flipud(np.rint(v * 255).astype(np.uint8))
    with open(path, "wb") as fh:
        fh.write(f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode())
        fh.write(img.tobytes())
