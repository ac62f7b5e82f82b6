"""Binary cross-entropy over sigmoid probabilities, computed in logit space.

The softplus form max(z,0) - z*y + log1p(exp(-|z|)) never overflows, so a
confidently wrong logit of -30 produces a loss near 30 instead of inf.
"""
from __future__ import annotations

import numpy as np


def sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def sigmoid_bce(logits: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean BCE loss and its gradient with respect to the logits.

    `logits` is [batch] or [batch, 1]; labels are 0/1. The gradient is
    (sigmoid(z) - y) / batch, shaped like `logits`.
    """
    z = np.asarray(logits, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64).reshape(z.shape)
    per_sample = np.maximum(z, 0.0) - z * y + np.log1p(np.exp(-np.abs(z)))
    loss = float(per_sample.mean())
    grad = (sigmoid(z) - y) / z.shape[0]
    return loss, grad
