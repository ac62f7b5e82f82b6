"""The two classifiers and their training loop.

`build_cnn1d` stacks ten conv/pool blocks over the raw waveform;
`build_cnn2d` stacks eight 3x3 conv units (24 counted layers: conv,
batchnorm and relu each count, pools and the head do not) over the
spectrogram and aggregates time with a mean. Training is plain mini-batch
Adam on sigmoid BCE with seeded shuffling, so a (data, config) pair fully
determines the weights and the per-epoch curves.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import EmptyDataset, InputTooShort, InputTooSmall
from .metrics import Metrics, confusion
from .nn_core import (
    Adam,
    BatchNorm,
    Conv1D,
    Conv2D,
    Dense,
    Dropout,
    Flatten,
    MaxPool1D,
    MaxPool2D,
    Network,
    ReLU,
    Sigmoid,
    TemporalMean,
    sigmoid_bce,
)

CNN1D_CHANNELS = (16, 16, 32, 32, 64, 64, 128, 128, 256, 256)
CNN1D_KERNEL = 5
CNN1D_DROPOUT = 0.2
CNN2D_CHANNELS = (8, 8, 16, 16, 32, 32, 64, 64)
CNN2D_POOL_AFTER = (2, 4, 6)     # 1-based block indices followed by a 2x2 pool


@dataclass
class ModelSpec:
    kind: str                     # "cnn1d" | "cnn2d"
    input_shape: tuple[int, ...]  # per-sample shape, without the batch axis
    layers: list[dict]

    def count(self, kind: str) -> int:
        return sum(1 for e in self.layers if e["kind"] == kind)

    @property
    def counted_layers(self) -> int:
        """Depth under the counting convention: conv, batchnorm and relu
        units count; pooling, dropout and the classifier head do not."""
        return sum(1 for e in self.layers if e["kind"] in ("conv1d", "conv2d", "batchnorm", "relu"))


@dataclass
class Model:
    spec: ModelSpec
    net: Network


@dataclass
class TrainConfig:
    epochs: int = 100
    batch_size: int = 128
    lr: float = 1e-3
    seed: int = 42
    eval_every: int = 1                   # epochs between metric rows
    stop_train_loss: float | None = None  # early stop once train loss dips below

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


@dataclass
class EpochRow:
    epoch: int
    train_loss: float
    train_acc: float
    val_loss: float
    val_acc: float


def build_cnn1d(input_len: int, seed: int = 42) -> Model:
    """Ten conv blocks (conv -> batchnorm -> relu -> maxpool -> dropout) and a
    dense sigmoid head. Needs input_len >= 1024 so all ten pools have at
    least two samples to reduce."""
    if input_len < 1024:
        raise InputTooShort(
            f"cnn1d needs input length >= 1024 for its 10 pooling stages, got {input_len}"
        )
    rng = np.random.default_rng(seed)
    layers = []
    spec_layers = []
    c_in = 1
    length = input_len
    for c_out in CNN1D_CHANNELS:
        layers += [
            Conv1D(c_in, c_out, kernel=CNN1D_KERNEL, padding="same", rng=rng),
            BatchNorm(c_out),
            ReLU(),
            MaxPool1D(2),
            Dropout(CNN1D_DROPOUT, seed=int(rng.integers(2**63))),
        ]
        pooled = length // 2
        spec_layers += [
            {"kind": "conv1d", "in": c_in, "out": c_out, "kernel": CNN1D_KERNEL,
             "padding": "same", "out_len": length},
            {"kind": "batchnorm", "channels": c_out},
            {"kind": "relu"},
            {"kind": "maxpool1d", "size": 2, "out_len": pooled},
            {"kind": "dropout", "rate": CNN1D_DROPOUT},
        ]
        length = pooled
        c_in = c_out
    features = c_in * length
    layers += [Flatten(), Dense(features, 1, rng=rng), Sigmoid()]
    spec_layers += [
        {"kind": "flatten", "features": features},
        {"kind": "dense", "in": features, "out": 1},
        {"kind": "sigmoid"},
    ]
    spec = ModelSpec(kind="cnn1d", input_shape=(1, input_len), layers=spec_layers)
    return Model(spec=spec, net=Network(layers))


def build_cnn2d(freq_bins: int, time_frames: int, seed: int = 42) -> Model:
    """Eight 3x3 conv units with pools after blocks 2, 4 and 6, then a mean
    over the remaining frequency x time grid and a dense sigmoid head."""
    if freq_bins < 16 or time_frames < 4:
        raise InputTooSmall(
            f"cnn2d needs at least 16 frequency bins and 4 time frames, got "
            f"{freq_bins}x{time_frames}"
        )
    rng = np.random.default_rng(seed)
    layers = []
    spec_layers = []
    c_in = 1
    h, w = freq_bins, time_frames
    for i, c_out in enumerate(CNN2D_CHANNELS, start=1):
        layers += [
            Conv2D(c_in, c_out, kernel=(3, 3), padding="same", rng=rng),
            BatchNorm(c_out),
            ReLU(),
        ]
        spec_layers += [
            {"kind": "conv2d", "in": c_in, "out": c_out, "kernel": [3, 3], "padding": "same"},
            {"kind": "batchnorm", "channels": c_out},
            {"kind": "relu"},
        ]
        if i in CNN2D_POOL_AFTER:
            layers.append(MaxPool2D(2))
            h, w = h // 2, w // 2
            spec_layers.append({"kind": "maxpool2d", "size": 2, "out_shape": [h, w]})
        c_in = c_out
    layers += [TemporalMean(), Dense(c_in, 1, rng=rng), Sigmoid()]
    spec_layers += [
        {"kind": "temporal_mean", "channels": c_in},
        {"kind": "dense", "in": c_in, "out": 1},
        {"kind": "sigmoid"},
    ]
    spec = ModelSpec(kind="cnn2d", input_shape=(1, freq_bins, time_frames), layers=spec_layers)
    return Model(spec=spec, net=Network(layers))


def _dataset_arrays(items: list[tuple[int, np.ndarray]]) -> tuple[np.ndarray, np.ndarray]:
    """Stack (label, values) pairs into X [n, 1, ...] and y [n]."""
    if not items:
        raise EmptyDataset("no items")
    x = np.stack([v for _, v in items])[:, None, ...].astype(np.float64)
    y = np.array([l for l, _ in items], dtype=np.float64)
    return x, y


def _eval_loss_acc(net: Network, x: np.ndarray, y: np.ndarray, batch: int = 256) -> tuple[float, float]:
    losses = []
    correct = 0
    for start in range(0, len(x), batch):
        xb = x[start : start + batch]
        yb = y[start : start + batch]
        z = net.logits(xb, training=False).reshape(-1)
        loss, _ = sigmoid_bce(z, yb)
        losses.append(loss * len(xb))
        correct += int(((z >= 0.0) == (yb == 1.0)).sum())   # p >= 0.5 iff z >= 0
    return float(np.sum(losses) / len(x)), correct / len(x)


def train(
    model: Model,
    train_items: list[tuple[int, np.ndarray]],
    val_items: list[tuple[int, np.ndarray]],
    cfg: TrainConfig,
) -> list[EpochRow]:
    """Mini-batch training; returns one metrics row per evaluated epoch."""
    x_train, y_train = _dataset_arrays(train_items)
    x_val, y_val = _dataset_arrays(val_items)
    net = model.net
    opt = Adam(net.parameters(), lr=cfg.lr)
    rng = np.random.default_rng(cfg.seed)

    rows: list[EpochRow] = []
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(len(x_train))
        for start in range(0, len(order), cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            z = net.logits(x_train[idx], training=True).reshape(-1)
            _, gz = sigmoid_bce(z, y_train[idx])
            net.backward_from_logits(gz.reshape(-1, 1))
            opt.step()
        if epoch % cfg.eval_every == 0 or epoch == cfg.epochs:
            train_loss, train_acc = _eval_loss_acc(net, x_train, y_train)
            val_loss, val_acc = _eval_loss_acc(net, x_val, y_val)
            rows.append(EpochRow(epoch, train_loss, train_acc, val_loss, val_acc))
            if cfg.stop_train_loss is not None and train_loss < cfg.stop_train_loss:
                break
    return rows


def predict_proba(model: Model, items: list[tuple[int, np.ndarray]], batch: int = 256) -> np.ndarray:
    x, _ = _dataset_arrays(items)
    probs = []
    for start in range(0, len(x), batch):
        probs.append(model.net.forward(x[start : start + batch], training=False).reshape(-1))
    return np.concatenate(probs)


def evaluate(
    model: Model, items: list[tuple[int, np.ndarray]], threshold: float = 0.5
) -> tuple[Metrics, np.ndarray]:
    """Per-item probabilities thresholded into a confusion matrix."""
    probs = predict_proba(model, items)
    labels = [l for l, _ in items]
    preds = [1 if p >= threshold else 0 for p in probs]
    return confusion(labels, preds), probs


def write_curves_csv(path: str | Path, rows: list[EpochRow]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "train_loss", "train_acc", "val_loss", "val_acc"])
        for r in rows:
            writer.writerow([r.epoch, repr(r.train_loss), repr(r.train_acc),
                             repr(r.val_loss), repr(r.val_acc)])


def read_curves_csv(path: str | Path) -> list[EpochRow]:
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            rows.append(
                EpochRow(
                    epoch=int(rec["epoch"]),
                    train_loss=float(rec["train_loss"]),
                    train_acc=float(rec["train_acc"]),
                    val_loss=float(rec["val_loss"]),
                    val_acc=float(rec["val_acc"]),
                )
            )
    return rows
