"""Reverse-mode automatic differentiation over numpy arrays.

A :class:`Tensor` wraps a contiguous float32/float64 ndarray. Operations
build an implicit computation tape: each result keeps references to its
parent tensors plus a closure that propagates the output gradient to them.
:func:`backward` walks that tape once, in reverse topological order.

A tape and its tensors form a single-threaded unit of work; detached
tensors are plain values and may be shared freely.
"""

import contextlib

import numpy as np

from cosal.autodiff import kernels
from cosal.errors import ConfigError, ContractError, ShapeError

LOG_FLOOR = 1e-12

_grad_enabled = True


def grad_enabled():
    return _grad_enabled


@contextlib.contextmanager
def no_grad():
    """Disable tape recording inside the block (forward-only evaluation)."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


class Tensor:
    __slots__ = ("data", "requires_grad", "grad", "_prev", "_vjp")

    def __init__(self, data, requires_grad=False, dtype=None):
        arr = np.asarray(data, dtype=dtype)
        if arr.dtype not in (np.float32, np.float64):
            arr = arr.astype(np.float32)
        self.data = np.ascontiguousarray(arr)
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self._prev = ()
        self._vjp = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self):
        return self.data.size

    def item(self):
        if self.data.size != 1:
            raise ContractError(f"item() on tensor of size {self.data.size}")
        return float(self.data.reshape(()))

    def detach(self):
        """A tape-free view of the same values."""
        return Tensor(self.data)

    def zero_grad(self):
        self.grad = None

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype}, requires_grad={self.requires_grad})"

    def _coerce(self, other):
        if isinstance(other, Tensor):
            return other
        return Tensor(np.asarray(other, dtype=self.data.dtype))

    def __add__(self, other):
        return add(self, self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, self._coerce(other))

    def __rsub__(self, other):
        return sub(self._coerce(other), self)

    def __mul__(self, other):
        return mul(self, self._coerce(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, self._coerce(other))

    def __neg__(self):
        return scale(self, -1.0)


def _node(data, parents, vjp):
    """Wrap a forward result; record the tape entry only when needed."""
    t = Tensor.__new__(Tensor)
    t.data = data
    t.grad = None
    if _grad_enabled and any(p.requires_grad for p in parents):
        t.requires_grad = True
        t._prev = tuple(parents)
        t._vjp = vjp
    else:
        t.requires_grad = False
        t._prev = ()
        t._vjp = None
    return t


def _acc(t, g):
    if t.requires_grad:
        if t.grad is None:
            t.grad = np.zeros_like(t.data)
        t.grad += g


def backward(loss):
    """Populate ``grad`` for every requires-grad tensor reachable from ``loss``.

    ``loss`` must be a scalar. Each tape entry is visited exactly once, in
    reverse topological order; separate uses of one tensor accumulate.
    """
    if loss.size != 1:
        raise ContractError(f"backward() needs a scalar loss, got shape {loss.shape}")
    topo = []
    visited = set()
    stack = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            topo.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for p in node._prev:
            if id(p) not in visited:
                stack.append((p, False))
    loss.grad = np.ones_like(loss.data)
    for node in reversed(topo):
        if node._vjp is not None:
            node._vjp(node.grad)


def _check_binary(a, b, op):
    if a.dtype != b.dtype:
        raise ContractError(f"{op}: dtype mismatch {a.dtype} vs {b.dtype}")
    if a.shape != b.shape and a.size != 1 and b.size != 1:
        raise ShapeError(f"{op}: shape mismatch {a.shape} vs {b.shape}")


def _reduce_to(g, shape):
    # collapse a broadcast gradient back onto a size-1 operand
    if g.shape == shape:
        return g
    return np.asarray(g.sum(), dtype=g.dtype).reshape(shape)


# ---------------------------------------------------------------------------
# elementwise ops (scalar-tensor broadcasting only)
# ---------------------------------------------------------------------------


def add(a, b):
    _check_binary(a, b, "add")

    def vjp(g):
        _acc(a, _reduce_to(g, a.data.shape))
        _acc(b, _reduce_to(g, b.data.shape))

    return _node(a.data + b.data, (a, b), vjp)


def sub(a, b):
    _check_binary(a, b, "sub")

    def vjp(g):
        _acc(a, _reduce_to(g, a.data.shape))
        _acc(b, _reduce_to(-g, b.data.shape))

    return _node(a.data - b.data, (a, b), vjp)


def mul(a, b):
    _check_binary(a, b, "mul")

    def vjp(g):
        _acc(a, _reduce_to(g * b.data, a.data.shape))
        _acc(b, _reduce_to(g * a.data, b.data.shape))

    return _node(a.data * b.data, (a, b), vjp)


def div(a, b):
    _check_binary(a, b, "div")

    def vjp(g):
        _acc(a, _reduce_to(g / b.data, a.data.shape))
        _acc(b, _reduce_to(-g * a.data / (b.data * b.data), b.data.shape))

    return _node(a.data / b.data, (a, b), vjp)


def scale(a, c):
    c = float(c)

    def vjp(g):
        _acc(a, g * np.asarray(c, dtype=g.dtype))

    return _node(a.data * np.asarray(c, dtype=a.dtype), (a,), vjp)


def relu(a):
    out = np.maximum(a.data, 0)

    def vjp(g):
        _acc(a, g * (a.data > 0))

    return _node(out, (a,), vjp)


def sigmoid(a):
    # tanh form is overflow-free on both tails
    out = 0.5 * (np.tanh(0.5 * a.data) + 1.0)

    def vjp(g):
        _acc(a, g * out * (1.0 - out))

    return _node(out, (a,), vjp)


def tanh(a):
    out = np.tanh(a.data)

    def vjp(g):
        _acc(a, g * (1.0 - out * out))

    return _node(out, (a,), vjp)


def softplus(a):
    out = np.logaddexp(np.asarray(0, dtype=a.dtype), a.data)

    def vjp(g):
        _acc(a, g * (0.5 * (np.tanh(0.5 * a.data) + 1.0)))

    return _node(out, (a,), vjp)


def exp(a):
    out = np.exp(a.data)

    def vjp(g):
        _acc(a, g * out)

    return _node(out, (a,), vjp)


def log(a):
    """Natural log with the input clamped to >= 1e-12."""
    clamped = np.maximum(a.data, np.asarray(LOG_FLOOR, dtype=a.dtype))
    out = np.log(clamped)

    def vjp(g):
        _acc(a, g * (a.data >= LOG_FLOOR) / clamped)

    return _node(out, (a,), vjp)


def sqrt(a):
    out = np.sqrt(a.data)

    def vjp(g):
        _acc(a, g * 0.5 / out)

    return _node(out, (a,), vjp)


# ---------------------------------------------------------------------------
# reductions and shape ops
# ---------------------------------------------------------------------------


def tsum(a):
    """Sum of all elements, as a scalar tensor."""

    def vjp(g):
        _acc(a, np.broadcast_to(g, a.data.shape))

    return _node(np.asarray(a.data.sum(), dtype=a.dtype), (a,), vjp)


def tmean(a):
    n = a.data.size

    def vjp(g):
        _acc(a, np.broadcast_to(g / n, a.data.shape))

    return _node(np.asarray(a.data.mean(), dtype=a.dtype), (a,), vjp)


def reshape(a, shape):
    shape = tuple(shape)
    old = a.data.shape

    def vjp(g):
        _acc(a, g.reshape(old))

    return _node(a.data.reshape(shape), (a,), vjp)


def transpose(a):
    if a.data.ndim != 2:
        raise ShapeError(f"transpose expects a matrix, got shape {a.shape}")

    def vjp(g):
        _acc(a, np.ascontiguousarray(g.T))

    return _node(np.ascontiguousarray(a.data.T), (a,), vjp)


def concat(tensors, axis=0):
    tensors = list(tensors)
    if not tensors:
        raise ContractError("concat of empty sequence")
    sizes = [t.data.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def vjp(g):
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            sl = [slice(None)] * g.ndim
            sl[axis] = slice(lo, hi)
            _acc(t, g[tuple(sl)])

    return _node(np.concatenate([t.data for t in tensors], axis=axis), tensors, vjp)


def matmul(a, b):
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise ShapeError(f"matmul expects matrices, got {a.shape} x {b.shape}")
    if a.data.shape[1] != b.data.shape[0]:
        raise ShapeError(f"matmul inner dimensions differ: {a.shape} x {b.shape}")
    if a.dtype != b.dtype:
        raise ContractError(f"matmul: dtype mismatch {a.dtype} vs {b.dtype}")

    def vjp(g):
        _acc(a, g @ b.data.T)
        _acc(b, a.data.T @ g)

    return _node(a.data @ b.data, (a, b), vjp)


def softmax(a, axis):
    if not -a.data.ndim <= axis < a.data.ndim:
        raise ShapeError(f"softmax axis {axis} invalid for shape {a.shape}")
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=axis, keepdims=True)

    def vjp(g):
        inner = (g * out).sum(axis=axis, keepdims=True)
        _acc(a, out * (g - inner))

    return _node(out, (a,), vjp)


# ---------------------------------------------------------------------------
# spatial ops on C x H x W maps
# ---------------------------------------------------------------------------


def conv2d(x, w, b, stride=1, padding=0):
    """Cross-correlation of a C x H x W input with O x C x k x k filters."""
    if x.data.ndim != 3 or w.data.ndim != 4:
        raise ShapeError(f"conv2d expects CHW input and OCkk weight, got {x.shape}, {w.shape}")
    c, h, wd = x.data.shape
    o, ci, k, k2 = w.data.shape
    if k != k2 or k % 2 == 0:
        raise ConfigError(f"conv2d kernel must be square and odd, got {k}x{k2}")
    if ci != c:
        raise ShapeError(f"conv2d channel mismatch: input {c}, weight {ci}")
    if b.data.shape != (o,):
        raise ShapeError(f"conv2d bias shape {b.shape}, expected ({o},)")
    if stride < 1 or padding < 0:
        raise ConfigError(f"conv2d stride {stride} / padding {padding} invalid")
    if (h + 2 * padding - k) % stride or (wd + 2 * padding - k) % stride:
        raise ConfigError(f"conv2d output size not integral for {h}x{wd}, k={k}, s={stride}, p={padding}")
    ho = (h + 2 * padding - k) // stride + 1
    wo = (wd + 2 * padding - k) // stride + 1
    if ho <= 0 or wo <= 0:
        raise ConfigError(f"conv2d output {ho}x{wo} not positive")

    xp = np.pad(x.data, ((0, 0), (padding, padding), (padding, padding))) if padding else x.data
    cols = kernels.im2col(xp, k, stride, ho, wo)
    wmat = w.data.reshape(o, c * k * k)
    out = (wmat @ cols + b.data[:, None]).reshape(o, ho, wo)

    def vjp(g):
        gmat = g.reshape(o, ho * wo)
        _acc(b, gmat.sum(axis=1))
        _acc(w, (gmat @ cols.T).reshape(w.data.shape))
        if x.requires_grad:
            gx = kernels.col2im(wmat.T @ gmat, c, h + 2 * padding, wd + 2 * padding, k, stride, ho, wo)
            if padding:
                gx = gx[:, padding : padding + h, padding : padding + wd]
            _acc(x, np.ascontiguousarray(gx))

    return _node(out, (x, w, b), vjp)


_POOL_MATRICES = {}


def _pool_matrix(n, bins, dtype):
    """(bins x n) row-stochastic matrix averaging over near-equal partitions."""
    key = (n, bins, np.dtype(dtype).str)
    m = _POOL_MATRICES.get(key)
    if m is None:
        m = np.zeros((bins, n), dtype=dtype)
        for i in range(bins):
            lo, hi = i * n // bins, (i + 1) * n // bins
            m[i, lo:hi] = 1.0 / (hi - lo)
        _POOL_MATRICES[key] = m
    return m


def adaptive_avg_pool(x, bins):
    """Average-pool a C x H x W map onto a bins x bins grid."""
    if x.data.ndim != 3:
        raise ShapeError(f"adaptive_avg_pool expects CHW, got {x.shape}")
    c, h, w = x.data.shape
    if bins < 1 or bins > h or bins > w:
        raise ConfigError(f"adaptive_avg_pool bins={bins} invalid for {h}x{w}")
    pr = _pool_matrix(h, bins, x.dtype)
    pc = _pool_matrix(w, bins, x.dtype)
    out = np.matmul(np.matmul(pr, x.data), pc.T)

    def vjp(g):
        _acc(x, np.matmul(np.matmul(pr.T, g), pc))

    return _node(np.ascontiguousarray(out), (x,), vjp)


def channel_norm(x, gain, shift, eps=1e-5):
    """Standardize each channel over its own H x W positions, then affine."""
    if x.data.ndim != 3:
        raise ShapeError(f"channel_norm expects CHW, got {x.shape}")
    c = x.data.shape[0]
    if gain.data.shape != (c,) or shift.data.shape != (c,):
        raise ShapeError(f"channel_norm gain/shift must be ({c},)")
    if eps <= 0:
        raise ConfigError("channel_norm eps must be positive")
    mu = x.data.mean(axis=(1, 2), keepdims=True)
    var = ((x.data - mu) ** 2).mean(axis=(1, 2), keepdims=True)
    inv = 1.0 / np.sqrt(var + np.asarray(eps, dtype=x.dtype))
    xhat = (x.data - mu) * inv
    out = gain.data[:, None, None] * xhat + shift.data[:, None, None]

    def vjp(g):
        _acc(shift, g.sum(axis=(1, 2)))
        _acc(gain, (g * xhat).sum(axis=(1, 2)))
        if x.requires_grad:
            gh = g * gain.data[:, None, None]
            m1 = gh.mean(axis=(1, 2), keepdims=True)
            m2 = (gh * xhat).mean(axis=(1, 2), keepdims=True)
            _acc(x, inv * (gh - m1 - xhat * m2))

    return _node(out, (x, gain, shift), vjp)


def upsample_nearest2x(x):
    if x.data.ndim != 3:
        raise ShapeError(f"upsample_nearest2x expects CHW, got {x.shape}")
    c, h, w = x.data.shape
    out = np.repeat(np.repeat(x.data, 2, axis=1), 2, axis=2)

    def vjp(g):
        _acc(x, g.reshape(c, h, 2, w, 2).sum(axis=(2, 4)))

    return _node(out, (x,), vjp)


# ---------------------------------------------------------------------------
# composites used throughout the model code
# ---------------------------------------------------------------------------


def tree_sum(tensors):
    """Balanced pairwise sum of a list of same-shaped tensors.

    The balanced tree keeps the reduction independent of any later
    parallel split and exact for power-of-two counts of equal values.
    """
    ts = list(tensors)
    if not ts:
        raise ContractError("tree_sum of empty sequence")
    while len(ts) > 1:
        nxt = [add(ts[i], ts[i + 1]) if i + 1 < len(ts) else ts[i] for i in range(0, len(ts), 2)]
        ts = nxt
    return ts[0]


def tree_mean(tensors):
    ts = list(tensors)
    return scale(tree_sum(ts), 1.0 / len(ts))
