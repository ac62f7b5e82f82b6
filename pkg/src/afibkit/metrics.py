"""Confusion-matrix metrics and the 1D-vs-2D comparison report."""
from __future__ import annotations

from dataclasses import asdict, dataclass

from .errors import EmptyInput, LengthMismatch


@dataclass
class Metrics:
    tp: int
    tn: int
    fp: int
    fn: int
    accuracy: float
    sensitivity: float
    specificity: float
    precision: float
    f1: float

    @property
    def n(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    def to_dict(self) -> dict:
        d = asdict(self)
        d["n"] = self.n
        return d


def confusion(labels, predictions) -> Metrics:
    labels = list(labels)
    predictions = list(predictions)
    if len(labels) != len(predictions):
        raise LengthMismatch(f"{len(labels)} labels vs {len(predictions)} predictions")
    if not labels:
        raise EmptyInput("no label/prediction pairs")
    for v in labels + predictions:
        if v not in (0, 1):
            raise ValueError(f"labels and predictions must be 0/1, got {v!r}")

    tp = sum(1 for y, p in zip(labels, predictions) if y == 1 and p == 1)
    tn = sum(1 for y, p in zip(labels, predictions) if y == 0 and p == 0)
    fp = sum(1 for y, p in zip(labels, predictions) if y == 0 and p == 1)
    fn = sum(1 for y, p in zip(labels, predictions) if y == 1 and p == 0)

    n = len(labels)
    accuracy = (tp + tn) / n
    sensitivity = tp / (tp + fn) if tp + fn else 0.0
    specificity = tn / (tn + fp) if tn + fp else 0.0
    precision = tp / (tp + fp) if tp + fp else 0.0
    # f1 = 2PR/(P+R), defined as 0 when precision + recall is 0
    f1 = 2 * precision * sensitivity / (precision + sensitivity) if precision + sensitivity else 0.0
    return Metrics(tp, tn, fp, fn, accuracy, sensitivity, specificity, precision, f1)


def compare_report(m1d: Metrics, m2d: Metrics) -> tuple[dict, str]:
    """Side-by-side comparison; the ordering flag records whether the 1-D
    model matched or beat the 2-D model, it is never a hard assertion."""
    report = {
        "cnn1d": m1d.to_dict(),
        "cnn2d": m2d.to_dict(),
        "ordering_1d_ge_2d": m1d.accuracy >= m2d.accuracy,
    }
    rows = ["accuracy", "sensitivity", "specificity", "precision", "f1"]
    lines = [f"{'metric':<12} {'cnn1d':>8} {'cnn2d':>8}"]
    for r in rows:
        lines.append(f"{r:<12} {getattr(m1d, r):>8.4f} {getattr(m2d, r):>8.4f}")
    lines.append(
        "1d >= 2d accuracy: " + ("yes" if report["ordering_1d_ge_2d"] else "no")
    )
    return report, "\n".join(lines)
