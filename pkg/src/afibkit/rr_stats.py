"""Statistics-based AF detection from RR intervals.

R peaks come from a Pan-Tompkins style pipeline (band-pass, derivative,
squaring, moving-window integration, adaptive threshold). The verdict rule
checks the range and spread of consecutive RR intervals; irregular spacing
with no dominant rhythm is the statistical fingerprint of fibrillation.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import SignalTooShort, TooFewPeaks
from .signal_prep import _windowed_sinc_lowpass

REFRACTORY_S = 0.200      # no two QRS complexes closer than this
INTEGRATION_S = 0.150     # moving-window integration length
REFINE_S = 0.050          # half-width for snapping to the raw-signal maximum
THRESHOLD_FACTOR = 0.5
PEAK_MEMORY = 8           # running-mean length for the adaptive threshold


class Verdict(enum.Enum):
    NORMAL = "NORMAL"
    AFIB = "AFIB"
    INDETERMINATE = "INDETERMINATE"


@dataclass
class RrThresholds:
    min_rr: float = 0.6          # seconds; 100 bpm
    max_rr: float = 1.2          # seconds; 50 bpm
    max_spread: float = 0.16     # max_rr - min_rr allowed for a regular rhythm
    cov_normal: float = 0.08
    cov_afib: float = 0.15


@dataclass
class RrVerdict:
    rr_intervals: np.ndarray
    rr_diffs: np.ndarray
    max_rr: float
    min_rr: float
    cov: float
    classification: Verdict


def _bandpass(signal: np.ndarray, hz: float) -> np.ndarray:
    # cascaded windowed-sinc FIRs: low-pass at 15 Hz, then high-pass at 5 Hz
    taps = 2 * int(0.1 * hz) + 1
    low = _windowed_sinc_lowpass(min(15.0 / (hz / 2), 0.99), taps)
    out = np.convolve(signal, low, mode="same")
    below = _windowed_sinc_lowpass(min(5.0 / (hz / 2), 0.99), taps)
    return out - np.convolve(out, below, mode="same")


def detect_r_peaks(signal: np.ndarray, hz: float) -> np.ndarray:
    """Return strictly increasing R-peak sample indices."""
    signal = np.asarray(signal, dtype=np.float64)
    if hz <= 0:
        raise ValueError("sampling rate must be positive")
    if signal.size < 2 * hz:
        raise SignalTooShort(f"need at least 2 s of signal, got {signal.size / hz:.2f} s")

    filtered = _bandpass(signal, hz)
    # 5-point derivative emphasises QRS slope
    derivative = np.convolve(filtered, np.array([1.0, 2.0, 0.0, -2.0, -1.0]) * hz / 8, mode="same")
    squared = derivative**2
    win = max(1, int(round(INTEGRATION_S * hz)))
    integrated = np.convolve(squared, np.ones(win) / win, mode="same")

    if integrated.max() <= 0:
        return np.empty(0, dtype=np.int64)

    # candidate local maxima of the integrated signal
    rising = integrated[1:-1] > integrated[:-2]
    falling = integrated[1:-1] >= integrated[2:]
    candidates = np.flatnonzero(rising & falling) + 1

    refractory = int(round(REFRACTORY_S * hz))
    startup = integrated[: int(2 * hz)].max()
    recent = [startup]
    threshold = THRESHOLD_FACTOR * startup

    accepted = []
    for idx in candidates:
        if accepted and idx - accepted[-1] < refractory:
            continue
        if integrated[idx] >= threshold:
            accepted.append(int(idx))
            recent.append(float(integrated[idx]))
            if len(recent) > PEAK_MEMORY:
                recent.pop(0)
            threshold = THRESHOLD_FACTOR * float(np.mean(recent))

    # snap each detection to the raw-signal maximum nearby
    half = int(round(REFINE_S * hz))
    peaks = []
    for idx in accepted:
        lo = max(0, idx - half)
        hi = min(signal.size, idx + half + 1)
        peaks.append(lo + int(np.argmax(signal[lo:hi])))
    peaks = sorted(set(peaks))

    # refinement may only move peaks by < half a refractory period, but be safe
    deduped = []
    for p in peaks:
        if deduped and p - deduped[-1] < refractory:
            continue
        deduped.append(p)
    return np.asarray(deduped, dtype=np.int64)


def rr_from_peaks(peaks: np.ndarray, hz: float) -> np.ndarray:
    """Consecutive R-peak spacings in seconds."""
    peaks = np.asarray(peaks)
    if peaks.size < 2:
        raise TooFewPeaks(f"need at least 2 peaks, got {peaks.size}")
    return np.diff(peaks) / hz


def classify_rr(
    rr_intervals: np.ndarray,
    thresholds: RrThresholds | None = None,
    rule: str = "combined",
) -> RrVerdict:
    """Classify a run of RR intervals as NORMAL, AFIB or INDETERMINATE.

    The default "combined" rule requires, for NORMAL, every interval inside
    [min_rr, max_rr], spread (max - min) within max_spread, and coefficient
    of variation within cov_normal; AFIB needs spread beyond max_spread or
    CoV beyond cov_afib. "paper-minmax" keeps only the range check and is
    binary: anything outside [min_rr, max_rr] is AFIB.
    """
    if rule not in ("combined", "paper-minmax"):
        raise ValueError(f"unknown rule {rule!r}")
    t = thresholds or RrThresholds()
    rr = np.asarray(rr_intervals, dtype=np.float64)
    if rr.size < 4:
        raise TooFewPeaks(f"need at least 4 RR intervals, got {rr.size}")

    max_rr = float(rr.max())
    min_rr = float(rr.min())
    spread = max_rr - min_rr
    cov = float(rr.std() / rr.mean()) if rr.mean() > 0 else float("inf")

    if rule == "paper-minmax":
        verdict = Verdict.NORMAL if (min_rr >= t.min_rr and max_rr <= t.max_rr) else Verdict.AFIB
    elif min_rr >= t.min_rr and max_rr <= t.max_rr and spread <= t.max_spread and cov <= t.cov_normal:
        verdict = Verdict.NORMAL
    elif spread > t.max_spread or cov > t.cov_afib:
        verdict = Verdict.AFIB
    else:
        verdict = Verdict.INDETERMINATE

    return RrVerdict(
        rr_intervals=rr,
        rr_diffs=np.diff(rr),
        max_rr=max_rr,
        min_rr=min_rr,
        cov=cov,
        classification=verdict,
    )
