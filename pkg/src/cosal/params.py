"""Parameter registry and the two learned layer types built on it.

All parameters of a model live in one :class:`ParamStore`, keyed by
hierarchical names. Creation order is fixed by model construction, so a
(seed, topology) pair fully determines every initial value.
"""

import math

import numpy as np

from cosal.autodiff import Tensor, channel_norm, conv2d
from cosal.errors import ConfigError


class ParamStore:
    def __init__(self, seed, dtype=np.float32, trainable=True):
        self._rng = np.random.default_rng(seed)
        self.dtype = np.dtype(dtype)
        self.trainable = trainable
        self.params = {}

    def param(self, name, shape, init="zeros", fan=None):
        """Create and register a parameter tensor.

        init: "zeros", "ones", or "glorot" (uniform in [-a, a] with
        a = sqrt(6 / (fan_in + fan_out)); fan must be given).
        """
        if name in self.params:
            raise ConfigError(f"duplicate parameter name {name!r}")
        if init == "zeros":
            data = np.zeros(shape, dtype=self.dtype)
        elif init == "ones":
            data = np.ones(shape, dtype=self.dtype)
        elif init == "glorot":
            fan_in, fan_out = fan
            a = math.sqrt(6.0 / (fan_in + fan_out))
            data = self._rng.uniform(-a, a, size=shape).astype(self.dtype)
        else:
            raise ConfigError(f"unknown init {init!r}")
        t = Tensor(data, requires_grad=self.trainable)
        self.params[name] = t
        return t

    def zero_grad(self):
        for t in self.params.values():
            t.grad = None

    def items(self):
        return self.params.items()

    def state_arrays(self):
        return {name: t.data for name, t in self.params.items()}

    def load_arrays(self, arrays):
        for name, t in self.params.items():
            if name not in arrays:
                raise ConfigError(f"missing parameter {name!r} in state")
            arr = np.asarray(arrays[name], dtype=self.dtype)
            if arr.shape != t.data.shape:
                raise ConfigError(f"parameter {name!r} shape {arr.shape} != {t.data.shape}")
            t.data = np.ascontiguousarray(arr)


class Conv2d:
    def __init__(self, store, name, cin, cout, k=3, stride=1, padding=None, init="glorot"):
        self.stride = stride
        self.padding = k // 2 if padding is None else padding
        self.w = store.param(f"{name}.w", (cout, cin, k, k), init=init, fan=(cin * k * k, cout * k * k))
        self.b = store.param(f"{name}.b", (cout,), init="zeros")

    def __call__(self, x):
        return conv2d(x, self.w, self.b, stride=self.stride, padding=self.padding)


class ChannelNorm:
    def __init__(self, store, name, channels, eps=1e-5):
        self.eps = eps
        self.gain = store.param(f"{name}.gain", (channels,), init="ones")
        self.shift = store.param(f"{name}.shift", (channels,), init="zeros")

    def __call__(self, x):
        return channel_norm(x, self.gain, self.shift, eps=self.eps)
