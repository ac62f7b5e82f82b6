"""Turns parsed records into labeled, watch-grade training segments.

The chain is: pick one lead, low-pass + decimate to the watch rate, inject
noise and baseline wander, cut fixed-length windows labeled from the rhythm
annotations, z-score each window, then shuffle/split/balance the result.
Everything is seeded; a fixed (record bytes, config) pair reproduces the
segment set byte for byte.
"""
from __future__ import annotations

import warnings
import zlib
from dataclasses import dataclass

import numpy as np

from .errors import ChannelOutOfRange, DegenerateSignal, EmptyDataset, SingleClass
from .wfdb_io import Record, Rhythm, RhythmInterval

WANDER_HZ = 0.3   # respiratory-band baseline drift


@dataclass
class PrepConfig:
    window_seconds: float = 10.0
    label_threshold: float = 0.5
    downsample_factor: int = 2
    noise_snr_db: float | None = 10.0
    wander_amplitude: float = 0.1
    seed: int = 42

    def __post_init__(self):
        if not 0 < self.label_threshold <= 1:
            raise ValueError("label_threshold must be in (0, 1]")
        if self.window_seconds <= 0:
            raise ValueError("window_seconds must be positive")
        if self.downsample_factor < 1:
            raise ValueError("downsample_factor must be >= 1")


@dataclass
class Segment:
    samples: np.ndarray          # float64, z-scored, fixed length
    label: int                   # 1 = AFIB, 0 = everything else
    source: tuple[str, int]      # (record name, start sample in the prepared signal)
    effective_hz: float


def select_channel(record: Record, index: int) -> np.ndarray:
    if not 0 <= index < record.header.num_signals:
        raise ChannelOutOfRange(
            f"channel {index} of {record.header.num_signals}-channel record"
        )
    return record.millivolts(index)


def _windowed_sinc_lowpass(cutoff_fraction: float, taps: int = 31) -> np.ndarray:
    """Hamming-windowed sinc FIR, unity DC gain. `cutoff_fraction` is the
    cutoff as a fraction of the input Nyquist frequency."""
    m = np.arange(taps) - (taps - 1) / 2
    h = np.sinc(cutoff_fraction * m)
    h *= np.hamming(taps)
    return h / h.sum()


def downsample(signal: np.ndarray, factor: int, sampling_hz: float) -> tuple[np.ndarray, float]:
    """Anti-alias filter then decimate. Returns (signal, new_hz).

    The filter is a 31-tap windowed sinc with cutoff at 0.45x the new Nyquist,
    applied centered so there is no group delay; output length is
    ceil(len / factor).
    """
    if factor < 1:
        raise ValueError("factor must be >= 1")
    signal = np.asarray(signal, dtype=np.float64)
    if factor == 1:
        return signal.copy(), float(sampling_hz)
    new_hz = sampling_hz / factor
    # cutoff as a fraction of the *input* Nyquist: 0.45 * (new Nyquist) / (old Nyquist)
    h = _windowed_sinc_lowpass(0.45 / factor)
    filtered = np.convolve(signal, h, mode="same")
    return filtered[::factor], new_hz


def add_noise(
    signal: np.ndarray,
    snr_db: float | None,
    wander_amplitude: float,
    seed: int | np.random.SeedSequence,
    sampling_hz: float,
) -> np.ndarray:
    """Add seeded white noise at the requested SNR plus a 0.3 Hz baseline
    wander scaled to the signal RMS. Deterministic per seed."""
    signal = np.asarray(signal, dtype=np.float64)
    if snr_db is None and wander_amplitude == 0:
        return signal.copy()
    rms = float(np.sqrt(np.mean(signal**2))) if signal.size else 0.0
    if rms == 0.0:
        raise DegenerateSignal("cannot scale noise against an all-zero signal")
    rng = np.random.default_rng(seed)
    out = signal.copy()
    if snr_db is not None:
        noise_power = rms**2 / 10 ** (snr_db / 10)
        out += rng.normal(0.0, np.sqrt(noise_power), size=signal.shape)
    if wander_amplitude > 0:
        phase = rng.uniform(0, 2 * np.pi)
        t = np.arange(signal.size) / sampling_hz
        out += wander_amplitude * rms * np.sin(2 * np.pi * WANDER_HZ * t + phase)
    return out


def rescale_intervals(
    intervals: list[RhythmInterval], factor: int, new_len: int
) -> list[RhythmInterval]:
    """Map rhythm intervals into the index space of a decimated signal.

    Boundaries are divided and rounded once each, so the intervals stay a
    partition; the final boundary is pinned to the new signal length.
    """
    if factor == 1:
        return intervals
    out = []
    for iv in intervals:
        start = int(round(iv.start_sample / factor))
        end = int(round(iv.end_sample / factor))
        out.append(RhythmInterval(min(start, new_len), min(end, new_len), iv.rhythm))
    if out:
        out[-1] = RhythmInterval(out[-1].start_sample, new_len, out[-1].rhythm)
    return [iv for iv in out if iv.end_sample > iv.start_sample]


def segment_record(
    signal: np.ndarray,
    intervals: list[RhythmInterval],
    cfg: PrepConfig,
    effective_hz: float,
    record_name: str = "",
) -> list[Segment]:
    """Cut non-overlapping windows of round(window_seconds * hz) samples,
    label each by AFIB overlap fraction, and z-score it. The trailing partial
    window and zero-variance windows are dropped."""
    signal = np.asarray(signal, dtype=np.float64)
    length = int(round(cfg.window_seconds * effective_hz))
    if length <= 0:
        raise ValueError("window too short for the sampling rate")

    afib_mask = np.zeros(signal.size, dtype=bool)
    for iv in intervals:
        if iv.rhythm is Rhythm.AFIB:
            afib_mask[iv.start_sample : iv.end_sample] = True

    segments = []
    for start in range(0, signal.size - length + 1, length):
        window = signal[start : start + length]
        frac = afib_mask[start : start + length].mean()
        label = 1 if frac >= cfg.label_threshold else 0
        mu = window.mean()
        sigma = window.std()
        if sigma < 1e-10:
            continue
        segments.append(
            Segment(
                samples=(window - mu) / sigma,
                label=label,
                source=(record_name, start),
                effective_hz=effective_hz,
            )
        )
    return segments


def split_dataset(
    segments: list[Segment], train_fraction: float = 0.9, seed: int = 42
) -> tuple[list[Segment], list[Segment]]:
    """Seeded shuffle then split; first round(train_fraction * n) go to train."""
    if len(segments) < 2:
        raise EmptyDataset("need at least 2 segments to split")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(segments))
    n_train = int(len(segments) * train_fraction + 0.5)
    train = [segments[i] for i in order[:n_train]]
    test = [segments[i] for i in order[n_train:]]
    if not test:
        warnings.warn("test split is empty after rounding; all segments went to train")
    return train, test


def balance_classes(segments: list[Segment], seed: int = 42) -> list[Segment]:
    """Randomly undersample the majority class to equal counts, preserving the
    original segment order among survivors."""
    pos = [i for i, s in enumerate(segments) if s.label == 1]
    neg = [i for i, s in enumerate(segments) if s.label == 0]
    if not pos or not neg:
        raise SingleClass(f"both classes required, got {len(pos)} positive / {len(neg)} negative")
    if len(pos) == len(neg):
        return list(segments)
    rng = np.random.default_rng(seed)
    majority, minority = (pos, neg) if len(pos) > len(neg) else (neg, pos)
    kept = rng.choice(len(majority), size=len(minority), replace=False)
    keep = sorted(minority + [majority[i] for i in kept])
    return [segments[i] for i in keep]


def prepare_record(
    record: Record,
    intervals: list[RhythmInterval],
    cfg: PrepConfig,
    channel: int = 0,
) -> list[Segment]:
    """Full per-record chain: channel select, downsample, degrade, window."""
    signal = select_channel(record, channel)
    signal, hz = downsample(signal, cfg.downsample_factor, record.header.sampling_hz)
    intervals = rescale_intervals(intervals, cfg.downsample_factor, signal.size)
    if cfg.noise_snr_db is not None or cfg.wander_amplitude > 0:
        # independent noise stream per record, still fully determined by cfg.seed
        noise_seed = np.random.SeedSequence(
            [cfg.seed, zlib.crc32(record.header.record_name.encode())]
        )
        signal = add_noise(
            signal,
            cfg.noise_snr_db,
            cfg.wander_amplitude,
            noise_seed,
            sampling_hz=hz,
        )
    return segment_record(signal, intervals, cfg, hz, record.header.record_name)
