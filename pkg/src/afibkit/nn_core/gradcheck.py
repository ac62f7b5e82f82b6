"""Finite-difference checking of the analytic gradients.

Central differences (L(p+eps) - L(p-eps)) / 2eps per parameter entry, against
the gradients produced by a full backward pass, on networks small enough to
sweep every parameter. Dropout masks are frozen by reseeding each dropout
layer before every loss evaluation; batchnorm runs in training mode on the
fixed batch, so the loss is a deterministic function of the parameters.
"""
from __future__ import annotations

import numpy as np

from .layers import Dropout
from .losses import sigmoid_bce
from .network import Network


def _freeze_dropout(net: Network) -> None:
    for layer in net.layers:
        if isinstance(layer, Dropout):
            layer.reseed(layer.seed)


def _loss(net: Network, x: np.ndarray, y: np.ndarray) -> float:
    _freeze_dropout(net)
    z = net.logits(x, training=True)
    loss, _ = sigmoid_bce(z, y)
    return loss


def gradcheck(net: Network, x: np.ndarray, y: np.ndarray, eps: float = 1e-5) -> float:
    """Return the max relative error between analytic and numeric gradients."""
    _freeze_dropout(net)
    z = net.logits(x, training=True)
    _, gz = sigmoid_bce(z, y)
    net.backward_from_logits(gz)
    analytic = [p.grad.copy() for p in net.parameters()]

    worst = 0.0
    for p, grad in zip(net.parameters(), analytic):
        flat_value = p.value.reshape(-1)
        flat_grad = grad.reshape(-1)
        for i in range(flat_value.size):
            original = flat_value[i]
            flat_value[i] = original + eps
            plus = _loss(net, x, y)
            flat_value[i] = original - eps
            minus = _loss(net, x, y)
            flat_value[i] = original
            numeric = (plus - minus) / (2.0 * eps)
            denom = max(abs(flat_grad[i]), abs(numeric), 1e-8)
            worst = max(worst, abs(flat_grad[i] - numeric) / denom)
    return worst
