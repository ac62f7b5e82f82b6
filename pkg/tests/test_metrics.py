import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from afibkit.errors import EmptyInput, LengthMismatch
from afibkit.metrics import compare_report, confusion


class TestConfusion:
    def test_perfect(self):
        m = confusion([1, 0], [1, 0])
        assert m.accuracy == 1.0 and m.f1 == 1.0

    def test_half_right(self):
        m = confusion([1, 1, 0, 0], [1, 0, 1, 0])
        assert m.accuracy == 0.5
        assert m.f1 == 0.5
        assert (m.tp, m.fn, m.fp, m.tn) == (1, 1, 1, 1)

    def test_degenerate_no_positives(self):
        m = confusion([0, 0, 0], [0, 0, 0])
        assert m.accuracy == 1.0
        assert m.f1 == 0.0          # 0 by convention, keeps reports machine-readable

    def test_constant_positive_on_balanced(self):
        m = confusion([1, 1, 0, 0], [1, 1, 1, 1])
        assert m.accuracy == 0.5
        assert m.specificity == 0.0
        assert m.sensitivity == 1.0

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            confusion([1], [1, 0])

    def test_empty(self):
        with pytest.raises(EmptyInput):
            confusion([], [])

    def test_non_binary_rejected(self):
        with pytest.raises(ValueError):
            confusion([2], [0])

    @given(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1)), min_size=1, max_size=60),
           st.randoms())
    def test_permutation_invariant(self, pairs, rnd):
        labels, preds = zip(*pairs)
        a = confusion(list(labels), list(preds))
        shuffled = list(pairs)
        rnd.shuffle(shuffled)
        l2, p2 = zip(*shuffled)
        b = confusion(list(l2), list(p2))
        assert a == b

    @given(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1)), min_size=1, max_size=60))
    def test_identities(self, pairs):
        labels, preds = zip(*pairs)
        m = confusion(list(labels), list(preds))
        assert m.tp + m.tn + m.fp + m.fn == len(pairs)
        assert m.accuracy == (m.tp + m.tn) / m.n
        if m.precision + m.sensitivity > 0:
            assert m.f1 == pytest.approx(
                2 * m.precision * m.sensitivity / (m.precision + m.sensitivity)
            )
        for frac in (m.accuracy, m.sensitivity, m.specificity, m.precision, m.f1):
            assert 0.0 <= frac <= 1.0


class TestCompareReport:
    @staticmethod
    def _metrics(acc):
        n = 100
        tp = int(acc * n) // 2
        tn = int(acc * n) - tp
        fp = (n - int(acc * n)) // 2
        fn = n - tp - tn - fp
        labels = [1] * (tp + fn) + [0] * (tn + fp)
        preds = [1] * tp + [0] * fn + [0] * tn + [1] * fp
        return confusion(labels, preds)

    def test_expected_ordering_flag(self):
        report, text = compare_report(self._metrics(0.82), self._metrics(0.74))
        assert report["ordering_1d_ge_2d"] is True
        assert "yes" in text

    def test_tie_counts_as_ordered(self):
        report, _ = compare_report(self._metrics(0.7), self._metrics(0.7))
        assert report["ordering_1d_ge_2d"] is True

    def test_flipped_ordering_still_reports(self):
        report, text = compare_report(self._metrics(0.5), self._metrics(0.6))
        assert report["ordering_1d_ge_2d"] is False
        assert "cnn1d" in report and "cnn2d" in report
        assert "accuracy" in text
