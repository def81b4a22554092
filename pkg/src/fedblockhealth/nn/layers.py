"""Layer implementations for the from-scratch network engine.

Tensors are float64 numpy arrays in NCHW layout. Every layer exposes
``forward(x, training) -> (y, cache)`` and ``backward(dy, cache) -> (dx, grads)``
where ``grads`` maps parameter names to arrays shaped like ``params``.
"""
from __future__ import annotations

import numpy as np

from .._backend import kernels
from ..errors import DomainError

ACTIVATIONS = ("linear", "relu", "sigmoid", "softmax")


def _activate(z, kind):
    if kind == "linear":
        return z
    if kind == "relu":
        return np.maximum(z, 0.0)
    if kind == "sigmoid":
        # split by sign to avoid overflow in exp
        out = np.empty_like(z)
        pos = z >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
        ez = np.exp(z[~pos])
        out[~pos] = ez / (1.0 + ez)
        return out
    if kind == "softmax":
        shifted = z - z.max(axis=1, keepdims=True)
        e = np.exp(shifted)
        return e / e.sum(axis=1, keepdims=True)
    raise DomainError(f"unknown activation {kind!r}")


def _activation_grad(dy, z, y, kind):
    if kind == "linear":
        return dy
    if kind == "relu":
        return dy * (z > 0)
    if kind == "sigmoid":
        return dy * y * (1.0 - y)
    if kind == "softmax":
        return y * (dy - (dy * y).sum(axis=1, keepdims=True))
    raise DomainError(f"unknown activation {kind!r}")


class Layer:
    kind = "layer"

    def __init__(self):
        self.params: dict[str, np.ndarray] = {}
        self.buffers: dict[str, np.ndarray] = {}

    def init(self, rng):
        pass

    def output_shape(self, input_shape):
        return tuple(input_shape)

    def spec(self) -> dict:
        return {"kind": self.kind}

    def forward(self, x, training):
        raise NotImplementedError

    def backward(self, dy, cache, preactivation=False):
        raise NotImplementedError


class Dense(Layer):
    """z = a W^T + b followed by an elementwise activation; W is (out, in)."""

    kind = "dense"

    def __init__(self, n_in, n_out, activation="relu"):
        super().__init__()
        if n_in < 1 or n_out < 1:
            raise DomainError("dense layer sizes must be positive")
        if activation not in ACTIVATIONS:
            raise DomainError(f"unknown activation {activation!r}")
        self.n_in, self.n_out, self.activation = n_in, n_out, activation
        self.params = {"W": np.zeros((n_out, n_in)), "b": np.zeros(n_out)}

    def init(self, rng):
        limit = np.sqrt(6.0 / self.n_in)  # He-uniform
        self.params["W"][...] = rng.uniform(-limit, limit, size=(self.n_out, self.n_in))
        self.params["b"][...] = 0.0

    def output_shape(self, input_shape):
        if tuple(input_shape) != (self.n_in,):
            raise DomainError(f"dense layer expects ({self.n_in},), got {tuple(input_shape)}")
        return (self.n_out,)

    def spec(self):
        return {"kind": self.kind, "n_in": self.n_in, "n_out": self.n_out, "activation": self.activation}

    def forward(self, x, training):
        z = x @ self.params["W"].T + self.params["b"]
        y = _activate(z, self.activation)
        return y, (x, z, y)

    def backward(self, dy, cache, preactivation=False):
        x, z, y = cache
        dz = dy if preactivation else _activation_grad(dy, z, y, self.activation)
        grads = {"W": dz.T @ x, "b": dz.sum(axis=0)}
        return dz @ self.params["W"], grads


class Conv2D(Layer):
    """2-D convolution (cross-correlation) over NCHW input, weights (F, C, kh, kw)."""

    kind = "conv2d"

    def __init__(self, in_channels, out_channels, kernel=3, stride=1, padding=1, activation="relu"):
        super().__init__()
        if min(in_channels, out_channels, kernel, stride) < 1 or padding < 0:
            raise DomainError("invalid convolution geometry")
        if activation not in ACTIVATIONS or activation == "softmax":
            raise DomainError(f"unsupported conv activation {activation!r}")
        self.c_in, self.c_out = in_channels, out_channels
        self.kernel, self.stride, self.padding = kernel, stride, padding
        self.activation = activation
        self.params = {"W": np.zeros((out_channels, in_channels, kernel, kernel)), "b": np.zeros(out_channels)}

    def init(self, rng):
        fan_in = self.c_in * self.kernel * self.kernel
        limit = np.sqrt(6.0 / fan_in)
        self.params["W"][...] = rng.uniform(-limit, limit, size=self.params["W"].shape)
        self.params["b"][...] = 0.0

    def output_shape(self, input_shape):
        if len(input_shape) != 3 or input_shape[0] != self.c_in:
            raise DomainError(f"conv layer expects ({self.c_in}, H, W), got {tuple(input_shape)}")
        _, h, w = input_shape
        ho = (h + 2 * self.padding - self.kernel) // self.stride + 1
        wo = (w + 2 * self.padding - self.kernel) // self.stride + 1
        if ho < 1 or wo < 1:
            raise DomainError(f"convolution output would be {ho}x{wo}")
        return (self.c_out, ho, wo)

    def spec(self):
        return {"kind": self.kind, "in_channels": self.c_in, "out_channels": self.c_out, "kernel": self.kernel,
                "stride": self.stride, "padding": self.padding, "activation": self.activation}

    def forward(self, x, training):
        pad = self.padding
        xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad))) if pad else np.ascontiguousarray(x)
        k = self.kernel
        cols = kernels.im2col(xp, k, k, self.stride)
        n, ho, wo = cols.shape[:3]
        flat = cols.reshape(n * ho * wo, -1)
        z = flat @ self.params["W"].reshape(self.c_out, -1).T + self.params["b"]
        z = z.reshape(n, ho, wo, self.c_out).transpose(0, 3, 1, 2)
        y = _activate(z, self.activation)
        return y, (xp.shape, flat, cols.shape, z, y)

    def backward(self, dy, cache, preactivation=False):
        xp_shape, flat, cols_shape, z, y = cache
        dz = dy if preactivation else _activation_grad(dy, z, y, self.activation)
        dz_flat = dz.transpose(0, 2, 3, 1).reshape(-1, self.c_out)
        wmat = self.params["W"].reshape(self.c_out, -1)
        grads = {"W": (dz_flat.T @ flat).reshape(self.params["W"].shape), "b": dz_flat.sum(axis=0)}
        dcols = (dz_flat @ wmat).reshape(cols_shape)
        k = self.kernel
        dxp = kernels.col2im(dcols, xp_shape, k, k, self.stride)
        pad = self.padding
        if pad:
            dxp = dxp[:, :, pad:-pad, pad:-pad]
        return dxp, grads


class MaxPool(Layer):
    """Non-overlapping max pooling; trailing rows/columns that do not fill a
    window are dropped. Gradient flows to the first maximal entry."""

    kind = "maxpool"

    def __init__(self, window=2):
        super().__init__()
        if window < 1:
            raise DomainError("pool window must be positive")
        self.window = window

    def output_shape(self, input_shape):
        if len(input_shape) != 3:
            raise DomainError("max pooling expects (C, H, W) input")
        c, h, w = input_shape
        ho, wo = h // self.window, w // self.window
        if ho < 1 or wo < 1:
            raise DomainError(f"pooling {h}x{w} by {self.window} leaves no output")
        return (c, ho, wo)

    def spec(self):
        return {"kind": self.kind, "window": self.window}

    def forward(self, x, training):
        n, c, h, w = x.shape
        k = self.window
        ho, wo = h // k, w // k
        win = x[:, :, :ho * k, :wo * k].reshape(n, c, ho, k, wo, k).transpose(0, 1, 2, 4, 3, 5)
        win = win.reshape(n, c, ho, wo, k * k)
        idx = win.argmax(axis=-1)
        y = np.take_along_axis(win, idx[..., None], axis=-1)[..., 0]
        return y, (x.shape, idx)

    def backward(self, dy, cache, preactivation=False):
        shape, idx = cache
        n, c, h, w = shape
        k = self.window
        ho, wo = idx.shape[2:]
        dwin = np.zeros((n, c, ho, wo, k * k))
        np.put_along_axis(dwin, idx[..., None], dy[..., None], axis=-1)
        dwin = dwin.reshape(n, c, ho, wo, k, k).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, ho * k, wo * k)
        dx = np.zeros(shape)
        dx[:, :, :ho * k, :wo * k] = dwin
        return dx, {}


class BatchNorm(Layer):
    """Batch normalization over the channel axis (axis 1) of 2-D or 4-D input."""

    kind = "batchnorm"

    def __init__(self, num_features, epsilon=1e-5, momentum=0.1):
        super().__init__()
        if num_features < 1 or not epsilon > 0 or not 0 <= momentum <= 1:
            raise DomainError("invalid batch-norm configuration")
        self.num_features, self.epsilon, self.momentum = num_features, epsilon, momentum
        self.params = {"gamma": np.ones(num_features), "beta": np.zeros(num_features)}
        self.buffers = {"running_mean": np.zeros(num_features), "running_var": np.ones(num_features)}

    def init(self, rng):
        self.params["gamma"][...] = 1.0
        self.params["beta"][...] = 0.0
        self.buffers["running_mean"][...] = 0.0
        self.buffers["running_var"][...] = 1.0

    def output_shape(self, input_shape):
        if input_shape[0] != self.num_features:
            raise DomainError(f"batch norm expects {self.num_features} channels, got {input_shape[0]}")
        return tuple(input_shape)

    def spec(self):
        return {"kind": self.kind, "num_features": self.num_features, "epsilon": self.epsilon,
                "momentum": self.momentum}

    @staticmethod
    def _to_2d(x):
        if x.ndim == 2:
            return x
        return x.transpose(0, 2, 3, 1).reshape(-1, x.shape[1])

    @staticmethod
    def _from_2d(x2, shape):
        if len(shape) == 2:
            return x2
        n, c, h, w = shape
        return x2.reshape(n, h, w, c).transpose(0, 3, 1, 2)

    def forward(self, x, training):
        x2 = self._to_2d(x)
        if training:
            mean = x2.mean(axis=0)
            var = x2.var(axis=0)
            m = self.momentum
            self.buffers["running_mean"][...] = (1 - m) * self.buffers["running_mean"] + m * mean
            self.buffers["running_var"][...] = (1 - m) * self.buffers["running_var"] + m * var
        else:
            # aggregated statistics can dip a rounding step below zero
            mean, var = self.buffers["running_mean"], np.maximum(self.buffers["running_var"], 0.0)
        inv_std = 1.0 / np.sqrt(var + self.epsilon)
        xhat = (x2 - mean) * inv_std
        y2 = xhat * self.params["gamma"] + self.params["beta"]
        return self._from_2d(y2, x.shape), (x.shape, xhat, inv_std)

    def backward(self, dy, cache, preactivation=False):
        shape, xhat, inv_std = cache
        dy2 = self._to_2d(dy)
        m = dy2.shape[0]
        grads = {"gamma": (dy2 * xhat).sum(axis=0), "beta": dy2.sum(axis=0)}
        dxhat = dy2 * self.params["gamma"]
        dx2 = inv_std / m * (m * dxhat - dxhat.sum(axis=0) - xhat * (dxhat * xhat).sum(axis=0))
        return self._from_2d(dx2, shape), grads


class Flatten(Layer):
    kind = "flatten"

    def output_shape(self, input_shape):
        return (int(np.prod(input_shape)),)

    def forward(self, x, training):
        return x.reshape(x.shape[0], -1), x.shape

    def backward(self, dy, cache, preactivation=False):
        return dy.reshape(cache), {}


LAYER_KINDS = {cls.kind: cls for cls in (Dense, Conv2D, MaxPool, BatchNorm, Flatten)}


def layer_from_spec(spec: dict) -> Layer:
    spec = dict(spec)
    kind = spec.pop("kind")
    try:
        cls = LAYER_KINDS[kind]
    except KeyError:
        raise DomainError(f"unknown layer kind {kind!r}") from None
    return cls(**spec)
