"""Layers with explicit forward/backward passes.

Each layer caches what its backward pass needs during forward and releases
the cache when backward runs, so a backward without a preceding forward
raises StateError. Gradients accumulate into Tensor.grad (call zero_grad
between steps).
"""

import numpy as np

from .. import kernels
from ..errors import StateError
from .tensor import Tensor


def _kaiming_uniform(rng, shape, fan_in, dtype):
    bound = np.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


class Layer:
    def params(self):
        return []

    def buffers(self):
        # (name, array) pairs of non-learnable state, e.g. batchnorm running stats
        return []

    def _take_cache(self):
        if getattr(self, "_cache", None) is None:
            raise StateError(f"{type(self).__name__}.backward called before forward")
        cache, self._cache = self._cache, None
        return cache


class Conv2D(Layer):
    """Valid 5x5 cross-correlation (no padding, stride 1)."""

    def __init__(self, name, in_channels, out_channels, ksize, rng, dtype=np.float32,
                 need_input_grad=True):
        fan_in = in_channels * ksize * ksize
        self.w = Tensor(f"{name}/w", _kaiming_uniform(
            rng, (out_channels, in_channels, ksize, ksize), fan_in, dtype))
        self.b = Tensor(f"{name}/b", np.zeros(out_channels, dtype=dtype))
        self.need_input_grad = need_input_grad
        self._cache = None

    def params(self):
        return [self.w, self.b]

    def forward(self, x, train=False):
        out = kernels.conv2d_forward(x, self.w.data, self.b.data)
        self._cache = x
        return out

    def backward(self, dout):
        x = self._take_cache()
        dx, dw, db = kernels.conv2d_backward(x, self.w.data, dout,
                                             need_dx=self.need_input_grad)
        self.w.grad += dw
        self.b.grad += db
        return dx


class BatchNorm(Layer):
    """Batch normalization over the batch (and spatial dims for 4-d input).

    Train mode normalizes with biased batch statistics and updates the
    running estimates (momentum 0.1); eval mode uses the running estimates.
    """

    def __init__(self, name, num_features, rng=None, eps=1e-5, momentum=0.1,
                 dtype=np.float32):
        self.gamma = Tensor(f"{name}/gamma", np.ones(num_features, dtype=dtype))
        self.beta = Tensor(f"{name}/beta", np.zeros(num_features, dtype=dtype))
        self.running_mean = np.zeros(num_features, dtype=dtype)
        self.running_var = np.ones(num_features, dtype=dtype)
        self._name = name
        self.eps = eps
        self.momentum = momentum
        self._cache = None

    def params(self):
        return [self.gamma, self.beta]

    def buffers(self):
        return [(f"{self._name}/running_mean", self.running_mean),
                (f"{self._name}/running_var", self.running_var)]

    def _axes_and_shape(self, x):
        if x.ndim == 2:
            return (0,), (1, -1)
        if x.ndim == 4:
            return (0, 2, 3), (1, -1, 1, 1)
        raise ValueError(f"batchnorm expects 2-d or 4-d input, got {x.ndim}-d")

    def forward(self, x, train=False):
        axes, pshape = self._axes_and_shape(x)
        if train:
            if x.shape[0] == 0:
                raise ValueError("batchnorm train mode on an empty batch")
            mean = x.mean(axis=axes)
            var = x.var(axis=axes)
            m = self.momentum
            self.running_mean[...] = (1 - m) * self.running_mean + m * mean
            self.running_var[...] = (1 - m) * self.running_var + m * var
        else:
            mean = self.running_mean
            var = self.running_var
        invstd = 1.0 / np.sqrt(var + self.eps)
        xhat = (x - mean.reshape(pshape)) * invstd.reshape(pshape)
        self._cache = (xhat, invstd, axes, pshape, train)
        return self.gamma.data.reshape(pshape) * xhat + self.beta.data.reshape(pshape)

    def backward(self, dout):
        xhat, invstd, axes, pshape, train = self._take_cache()
        dgamma = (dout * xhat).sum(axis=axes)
        dbeta = dout.sum(axis=axes)
        self.gamma.grad += dgamma
        self.beta.grad += dbeta
        g = (self.gamma.data * invstd).reshape(pshape)
        if not train:
            return dout * g
        count = 1
        for ax in axes:
            count *= dout.shape[ax]
        return (g / count) * (count * dout - dbeta.reshape(pshape)
                              - xhat * dgamma.reshape(pshape))


class ReLU(Layer):
    def forward(self, x, train=False):
        mask = x > 0
        self._cache = mask
        self.last_mask = mask
        return x * mask

    def backward(self, dout):
        return dout * self._take_cache()


class MaxPool2x2(Layer):
    """2x2 stride-2 max pooling; odd trailing rows/columns are dropped."""

    def forward(self, x, train=False):
        out, code = kernels.maxpool2x2_forward(x)
        self._cache = (code, x.shape)
        self.last_code = code
        return out

    def backward(self, dout):
        code, in_shape = self._take_cache()
        return kernels.maxpool2x2_backward(dout, code, in_shape)


class Flatten(Layer):
    def forward(self, x, train=False):
        self._cache = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dout):
        return dout.reshape(self._take_cache())


class Dense(Layer):
    def __init__(self, name, in_features, out_features, rng, dtype=np.float32):
        self.w = Tensor(f"{name}/w", _kaiming_uniform(
            rng, (in_features, out_features), in_features, dtype))
        self.b = Tensor(f"{name}/b", np.zeros(out_features, dtype=dtype))
        self._cache = None

    def params(self):
        return [self.w, self.b]

    def forward(self, x, train=False):
        self._cache = x
        return x @ self.w.data + self.b.data

    def backward(self, dout):
        x = self._take_cache()
        self.w.grad += x.T @ dout
        self.b.grad += dout.sum(axis=0)
        return dout @ self.w.data.T


class Tanh(Layer):
    def forward(self, x, train=False):
        out = np.tanh(x)
        self._cache = out
        return out

    def backward(self, dout):
        out = self._take_cache()
        return dout * (1.0 - out * out)


class Embedding(Layer):
    """Lookup table mapping integer ids to dense vectors."""

    def __init__(self, name, num_embeddings, dim, rng, dtype=np.float32):
        self.w = Tensor(f"{name}/w",
                        rng.uniform(-0.1, 0.1, size=(num_embeddings, dim)).astype(dtype))
        self._cache = None

    def params(self):
        return [self.w]

    def forward(self, ids, train=False):
        ids = np.asarray(ids)
        if ids.ndim != 1:
            raise ValueError("embedding ids must be a 1-d integer array")
        if ids.min(initial=0) < 0 or (ids.size and ids.max() >= self.w.data.shape[0]):
            raise IndexError("embedding id out of range")
        self._cache = ids
        return self.w.data[ids]

    def backward(self, dout):
        ids = self._take_cache()
        np.add.at(self.w.grad, ids, dout)
        return None
