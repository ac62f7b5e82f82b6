import numpy as np
import pytest

import synthecg
from afibkit.errors import SignalTooShort, TooFewPeaks
from afibkit.rr_stats import (
    RrThresholds,
    Verdict,
    classify_rr,
    detect_r_peaks,
    rr_from_peaks,
)

HZ = 250.0


class TestDetectRPeaks:
    def test_flat_zero_gives_no_peaks(self):
        assert detect_r_peaks(np.zeros(int(60 * HZ)), HZ).size == 0

    def test_too_short(self):
        with pytest.raises(SignalTooShort):
            detect_r_peaks(np.zeros(100), HZ)

    def test_impulse_train_count(self):
        # one unit impulse per second for 60 s; startup may cost a beat or two
        x = np.zeros(int(60 * HZ))
        x[:: int(HZ)] = 1.0
        peaks = detect_r_peaks(x, HZ)
        assert 58 <= peaks.size <= 60

    def test_refractory_spacing(self):
        x = synthecg.synthetic_ecg("afib", 120.0, HZ, seed=4)
        rng = np.random.default_rng(0)
        x = x + rng.normal(0, 0.05, size=x.size)
        peaks = detect_r_peaks(x, HZ)
        assert peaks.size > 50
        assert np.diff(peaks).min() >= int(0.200 * HZ)

    def test_synthetic_beats_recovered(self):
        beats = synthecg.regular_beat_times(90.0, seed=5)
        x = synthecg.ecg_waveform(beats, 90.0, HZ)
        peaks = detect_r_peaks(x, HZ)
        truth = np.round(beats * HZ).astype(int)
        tol = int(0.150 * HZ)
        matched = sum(np.any(np.abs(truth - p) <= tol) for p in peaks)
        assert matched / truth.size >= 0.95        # sensitivity
        assert matched / max(peaks.size, 1) >= 0.95  # positive predictivity

    def test_peaks_strictly_increasing(self):
        x = synthecg.synthetic_ecg("normal", 60.0, HZ, seed=6)
        peaks = detect_r_peaks(x, HZ)
        assert np.all(np.diff(peaks) > 0)


class TestRrFromPeaks:
    def test_constant_spacing(self):
        assert np.allclose(rr_from_peaks(np.array([0, 200, 400]), HZ), [0.8, 0.8])

    def test_single_interval(self):
        assert np.allclose(rr_from_peaks(np.array([0, 250]), HZ), [1.0])

    def test_one_peak_rejected(self):
        with pytest.raises(TooFewPeaks):
            rr_from_peaks(np.array([5]), HZ)

    def test_scale_coherence(self):
        peaks = np.array([0, 180, 390, 600])
        base = rr_from_peaks(peaks, HZ)
        scaled = rr_from_peaks(peaks * 4, HZ * 4)
        assert np.allclose(base, scaled)


class TestClassifyRr:
    def test_steady_rhythm_is_normal(self):
        v = classify_rr(np.array([0.8, 0.8, 0.8, 0.8]))
        assert v.classification is Verdict.NORMAL
        assert v.max_rr == v.min_rr == 0.8
        assert v.rr_diffs.size == 3

    def test_wide_spread_is_afib(self):
        v = classify_rr(np.array([0.7, 0.72, 0.69, 1.05]))
        assert v.classification is Verdict.AFIB
        assert v.max_rr - v.min_rr == pytest.approx(0.36)

    def test_uniform_rr_always_afib(self):
        # Monte-Carlo oracle: spread of 20 draws from U(0.4, 1.2) virtually
        # never fits inside the 0.16 s regularity band
        for seed in range(100):
            rr = np.random.default_rng(seed).uniform(0.4, 1.2, size=20)
            assert classify_rr(rr).classification is Verdict.AFIB

    def test_jittered_regular_always_normal(self):
        for seed in range(100):
            rr = 0.8 + np.random.default_rng(seed).uniform(-0.01, 0.01, size=20)
            assert classify_rr(rr).classification is Verdict.NORMAL

    def test_indeterminate_band(self):
        # CoV between the normal and afib cutoffs, spread within 0.16
        rr = np.array([0.60, 0.74, 0.74, 0.74, 0.74, 0.60, 0.60, 0.60])
        v = classify_rr(rr)
        assert 0.08 < v.cov <= 0.15
        assert v.classification is Verdict.INDETERMINATE

    def test_slow_rhythm_not_normal(self):
        v = classify_rr(np.array([1.5, 1.5, 1.5, 1.5]))
        assert v.classification is not Verdict.NORMAL

    def test_permutation_invariant(self):
        rng = np.random.default_rng(12)
        rr = rng.uniform(0.5, 1.1, size=12)
        a = classify_rr(rr)
        b = classify_rr(rng.permutation(rr))
        assert a.classification == b.classification
        assert a.max_rr == b.max_rr and a.min_rr == b.min_rr
        assert a.cov == pytest.approx(b.cov)

    def test_paper_minmax_rule_is_binary(self):
        inside = classify_rr(np.array([0.65, 1.1, 0.9, 0.7]), rule="paper-minmax")
        assert inside.classification is Verdict.NORMAL    # combined rule would not say this
        outside = classify_rr(np.array([0.5, 0.8, 0.8, 0.8]), rule="paper-minmax")
        assert outside.classification is Verdict.AFIB

    def test_custom_thresholds(self):
        t = RrThresholds(max_spread=0.5, cov_afib=0.3)
        v = classify_rr(np.array([0.7, 0.72, 0.69, 1.05]), thresholds=t)
        assert v.classification is not Verdict.AFIB

    def test_too_few_intervals(self):
        with pytest.raises(TooFewPeaks):
            classify_rr(np.array([0.8, 0.8, 0.8]))


class TestPipeline:
    @pytest.mark.parametrize("bpm", [55, 65, 75, 85, 95])
    def test_constant_rate_is_normal(self, bpm):
        rr = 60.0 / bpm
        beats = np.arange(0.3, 59.0, rr)
        x = synthecg.ecg_waveform(beats, 60.0, HZ)
        peaks = detect_r_peaks(x, HZ)
        verdict = classify_rr(rr_from_peaks(peaks, HZ))
        assert verdict.classification is Verdict.NORMAL

    def test_synthetic_afib_detected(self):
        x = synthecg.synthetic_ecg("afib", 60.0, HZ, seed=21)
        peaks = detect_r_peaks(x, HZ)
        verdict = classify_rr(rr_from_peaks(peaks, HZ))
        assert verdict.classification is Verdict.AFIB


class TestAgainstReferenceRecord:
    def test_mitdb_100_first_minute(self):
        from conftest import require_record
        from afibkit.signal_prep import select_channel
        from afibkit.wfdb_io import BEAT_CODES, load_annotations, load_record

        prefix = require_record("mitdb", "100")
        record = load_record(prefix)
        hz = record.header.sampling_hz
        signal = select_channel(record, 0)[: int(60 * hz)]
        peaks = detect_r_peaks(signal, hz)
        ann = load_annotations(prefix)
        truth = np.array(
            [a.sample_index for a in ann.annotations
             if a.code in BEAT_CODES and a.sample_index < int(60 * hz)]
        )
        tol = int(0.150 * hz)
        matched_truth = sum(np.any(np.abs(peaks - t) <= tol) for t in truth)
        matched_peaks = sum(np.any(np.abs(truth - p) <= tol) for p in peaks)
        assert matched_truth / truth.size >= 0.95
        assert matched_peaks / peaks.size >= 0.95
