"""Sequential network layers with explicit forward/backward passes.

Every layer caches what its backward pass needs during forward (inputs,
argmax positions, dropout masks) and raises :class:`StaleForward` if
backward runs without a matching forward. Parameters live in `Param`
holders that the optimizer updates in place.
"""
from __future__ import annotations

import numpy as np

from ..errors import DegenerateBatch, ShapeMismatch, StaleForward
from . import kernels


class Param:
    __slots__ = ("name", "value", "grad")

    def __init__(self, name: str, value: np.ndarray):
        self.name = name
        self.value = value
        self.grad: np.ndarray | None = None


class Layer:
    kind = "layer"

    def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        raise NotImplementedError

    def backward(self, gy: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def params(self) -> list[Param]:
        return []

    def buffers(self) -> list[tuple[str, np.ndarray]]:
        """Non-trainable state that still belongs in a weights file."""
        return []

    def _take_cache(self, name: str = "_cache"):
        cache = getattr(self, name, None)
        if cache is None:
            raise StaleForward(f"{self.kind}: backward without a recorded forward")
        setattr(self, name, None)
        return cache


def _same_pad(kernel: int) -> int:
    if kernel % 2 == 0:
        raise ValueError("'same' padding needs an odd kernel size")
    return (kernel - 1) // 2


class Conv1D(Layer):
    kind = "conv1d"

    def __init__(self, c_in: int, c_out: int, kernel: int = 5,
                 padding: int | str = "same", rng: np.random.Generator | None = None):
        rng = rng or np.random.default_rng(0)
        self.pad = _same_pad(kernel) if padding == "same" else int(padding)
        scale = np.sqrt(2.0 / (c_in * kernel))
        self.w = Param("w", rng.normal(0.0, scale, size=(c_out, c_in, kernel)))
        self.b = Param("b", np.zeros(c_out))
        self._cache = None

    def forward(self, x, training=False):
        y = kernels.conv1d(x, self.w.value, self.b.value, self.pad)
        self._cache = x
        return y

    def backward(self, gy):
        x = self._take_cache()
        gx, gw, gb = kernels.conv1d_grads(x, self.w.value, gy, self.pad)
        self.w.grad = gw
        self.b.grad = gb
        return gx

    def params(self):
        return [self.w, self.b]


class Conv2D(Layer):
    kind = "conv2d"

    def __init__(self, c_in: int, c_out: int, kernel: tuple[int, int] = (3, 3),
                 padding: tuple[int, int] | str = "same", rng: np.random.Generator | None = None):
        rng = rng or np.random.default_rng(0)
        kh, kw = kernel
        if padding == "same":
            self.pad = (_same_pad(kh), _same_pad(kw))
        elif isinstance(padding, int):
            self.pad = (padding, padding)
        else:
            self.pad = (int(padding[0]), int(padding[1]))
        scale = np.sqrt(2.0 / (c_in * kh * kw))
        self.w = Param("w", rng.normal(0.0, scale, size=(c_out, c_in, kh, kw)))
        self.b = Param("b", np.zeros(c_out))
        self._cache = None

    def forward(self, x, training=False):
        y = kernels.conv2d(x, self.w.value, self.b.value, *self.pad)
        self._cache = x
        return y

    def backward(self, gy):
        x = self._take_cache()
        gx, gw, gb = kernels.conv2d_grads(x, self.w.value, gy, *self.pad)
        self.w.grad = gw
        self.b.grad = gb
        return gx

    def params(self):
        return [self.w, self.b]


class MaxPool1D(Layer):
    kind = "maxpool1d"

    def __init__(self, size: int = 2, stride: int | None = None):
        self.size = size
        self.stride = stride if stride is not None else size
        self._cache = None

    def forward(self, x, training=False):
        b, c, length = x.shape
        if length < self.size:
            raise ShapeMismatch(f"maxpool1d: spatial {length} < window {self.size}")
        if self.size == 2 and self.stride == 2:
            # fast path for the ubiquitous halving pool: a pairwise compare
            # instead of building the full windows array; ties pick the first
            # element, matching argmax
            n_out = length // 2
            left = x[:, :, 0 : 2 * n_out : 2]
            right = x[:, :, 1 : 2 * n_out : 2]
            take_right = right > left
            self._cache = (x.shape, ("pair", take_right))
            return np.where(take_right, right, left)
        n_out = (length - self.size) // self.stride + 1
        starts = np.arange(n_out) * self.stride
        windows = x[:, :, starts[:, None] + np.arange(self.size)[None, :]]  # [b,c,n_out,size]
        arg = windows.argmax(axis=3)
        y = np.take_along_axis(windows, arg[..., None], axis=3)[..., 0]
        self._cache = (x.shape, ("index", starts[None, None, :] + arg))
        return y

    def backward(self, gy):
        shape, (mode, state) = self._take_cache()
        gx = np.zeros(shape)
        if mode == "pair":
            n_out = gy.shape[2]
            gx[:, :, 0 : 2 * n_out : 2] = np.where(state, 0.0, gy)
            gx[:, :, 1 : 2 * n_out : 2] = np.where(state, gy, 0.0)
            return gx
        b_idx, c_idx, o_idx = np.indices(gy.shape)
        np.add.at(gx, (b_idx, c_idx, state), gy)
        return gx


class MaxPool2D(Layer):
    kind = "maxpool2d"

    def __init__(self, size: int = 2):
        self.size = size          # square window, stride == size, remainder dropped
        self._cache = None

    def forward(self, x, training=False):
        b, c, h, w = x.shape
        s = self.size
        if h < s or w < s:
            raise ShapeMismatch(f"maxpool2d: spatial {(h, w)} < window {s}")
        ho, wo = h // s, w // s
        view = x[:, :, : ho * s, : wo * s].reshape(b, c, ho, s, wo, s)
        tiles = view.transpose(0, 1, 2, 4, 3, 5).reshape(b, c, ho, wo, s * s)
        arg = tiles.argmax(axis=4)
        y = np.take_along_axis(tiles, arg[..., None], axis=4)[..., 0]
        self._cache = (x.shape, arg)
        return y

    def backward(self, gy):
        shape, arg = self._take_cache()
        b, c, h, w = shape
        s = self.size
        ho, wo = h // s, w // s
        tiles = np.zeros((b, c, ho, wo, s * s))
        np.put_along_axis(tiles, arg[..., None], gy[..., None], axis=4)
        gx = np.zeros(shape)
        gx[:, :, : ho * s, : wo * s] = (
            tiles.reshape(b, c, ho, wo, s, s).transpose(0, 1, 2, 4, 3, 5).reshape(b, c, ho * s, wo * s)
        )
        return gx


class BatchNorm(Layer):
    kind = "batchnorm"

    def __init__(self, channels: int, momentum: float = 0.9, eps: float = 1e-5):
        self.gamma = Param("gamma", np.ones(channels))
        self.beta = Param("beta", np.zeros(channels))
        self.running_mean = np.zeros(channels)
        self.running_var = np.ones(channels)
        self.momentum = momentum
        self.eps = eps
        self._cache = None

    @staticmethod
    def _axes(x):
        return (0,) + tuple(range(2, x.ndim))

    def _shape(self, x):
        return (1, -1) + (1,) * (x.ndim - 2)

    def forward(self, x, training=False):
        axes = self._axes(x)
        shape = self._shape(x)
        if training:
            if x.shape[0] < 2:
                raise DegenerateBatch(f"batchnorm needs batch >= 2 in training, got {x.shape[0]}")
            mean = x.mean(axis=axes)
            var = x.var(axis=axes)
            self.running_mean = self.momentum * self.running_mean + (1 - self.momentum) * mean
            self.running_var = self.momentum * self.running_var + (1 - self.momentum) * var
            inv_std = 1.0 / np.sqrt(var + self.eps)
            x_hat = (x - mean.reshape(shape)) * inv_std.reshape(shape)
            self._cache = (x_hat, inv_std)
            return self.gamma.value.reshape(shape) * x_hat + self.beta.value.reshape(shape)
        # inference: fold normalization and affine into a single x*a + b pass
        inv_std = 1.0 / np.sqrt(self.running_var + self.eps)
        scale = self.gamma.value * inv_std
        shift = self.beta.value - self.running_mean * scale
        return x * scale.reshape(shape) + shift.reshape(shape)

    def backward(self, gy):
        # full batch-statistics gradient (mean and variance both depend on x)
        x_hat, inv_std = self._take_cache()
        axes = self._axes(gy)
        shape = self._shape(gy)
        n = gy.size // gy.shape[1]
        self.gamma.grad = (gy * x_hat).sum(axis=axes)
        self.beta.grad = gy.sum(axis=axes)
        g_hat = gy * self.gamma.value.reshape(shape)
        term = (
            g_hat
            - g_hat.mean(axis=axes).reshape(shape)
            - x_hat * (g_hat * x_hat).sum(axis=axes).reshape(shape) / n
        )
        return term * inv_std.reshape(shape)

    def params(self):
        return [self.gamma, self.beta]

    def buffers(self):
        # running statistics must travel with the weights or a reloaded model
        # normalizes against the wrong distribution at inference
        return [("running_mean", self.running_mean), ("running_var", self.running_var)]


class Dropout(Layer):
    kind = "dropout"

    def __init__(self, rate: float = 0.5, seed: int = 0):
        if not 0 <= rate < 1:
            raise ValueError("dropout rate must be in [0, 1)")
        self.rate = rate
        self.seed = seed
        self._rng = np.random.default_rng(seed)
        self._cache = None

    def reseed(self, seed: int) -> None:
        """Reset the mask stream; the gradient checker uses this to freeze masks."""
        self._rng = np.random.default_rng(seed)

    def forward(self, x, training=False):
        if not training or self.rate == 0.0:
            self._cache = None
            return x
        mask = self._rng.random(x.shape) >= self.rate
        self._cache = mask
        return x * mask / (1.0 - self.rate)

    def backward(self, gy):
        if self._cache is None:
            return gy           # identity path: inference or rate 0
        mask = self._take_cache()
        return gy * mask / (1.0 - self.rate)


class Dense(Layer):
    kind = "dense"

    def __init__(self, f_in: int, f_out: int, rng: np.random.Generator | None = None):
        rng = rng or np.random.default_rng(0)
        self.w = Param("w", rng.normal(0.0, np.sqrt(2.0 / f_in), size=(f_out, f_in)))
        self.b = Param("b", np.zeros(f_out))
        self._cache = None

    def forward(self, x, training=False):
        if x.ndim != 2 or x.shape[1] != self.w.value.shape[1]:
            raise ShapeMismatch(
                f"dense: input {x.shape} vs weights {self.w.value.shape}"
            )
        self._cache = x
        return x @ self.w.value.T + self.b.value

    def backward(self, gy):
        x = self._take_cache()
        self.w.grad = gy.T @ x
        self.b.grad = gy.sum(axis=0)
        return gy @ self.w.value

    def params(self):
        return [self.w, self.b]


class ReLU(Layer):
    kind = "relu"

    def __init__(self):
        self._cache = None

    def forward(self, x, training=False):
        mask = x > 0
        self._cache = mask
        return x * mask

    def backward(self, gy):
        return gy * self._take_cache()


class Sigmoid(Layer):
    kind = "sigmoid"

    def __init__(self):
        self._cache = None

    def forward(self, x, training=False):
        y = np.empty_like(x)
        pos = x >= 0
        y[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
        ex = np.exp(x[~pos])
        y[~pos] = ex / (1.0 + ex)
        self._cache = y
        return y

    def backward(self, gy):
        y = self._take_cache()
        return gy * y * (1.0 - y)


class Flatten(Layer):
    kind = "flatten"

    def __init__(self):
        self._cache = None

    def forward(self, x, training=False):
        self._cache = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, gy):
        return gy.reshape(self._take_cache())


class TemporalMean(Layer):
    """Mean over every axis after (batch, channels); [B, C, *spatial] -> [B, C]."""

    kind = "temporal_mean"

    def __init__(self):
        self._cache = None

    def forward(self, x, training=False):
        if x.ndim < 3:
            raise ShapeMismatch(f"temporal_mean needs [batch, channels, ...], got {x.shape}")
        self._cache = x.shape
        return x.mean(axis=tuple(range(2, x.ndim)))

    def backward(self, gy):
        shape = self._take_cache()
        count = int(np.prod(shape[2:]))
        expand = gy.reshape(gy.shape + (1,) * (len(shape) - 2))
        return np.broadcast_to(expand / count, shape).copy()
