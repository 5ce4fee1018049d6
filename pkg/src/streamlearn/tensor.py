"""Dense tensors with reverse-mode differentiation over a small, closed op set.

The engine is deliberately minimal: each op builds a node holding a numpy
array and a backward closure, and `Tensor.backward()` walks the graph once in
reverse topological order.  The op set is exactly what the model zoo needs
(affine, 2d convolution, 2x average pool, nearest upsample, relu, group norm,
softmax, matmul, reshape/transpose, elementwise arithmetic, reductions); there
is no general graph compiler.
"""
from __future__ import annotations

import numpy as np

from .errors import NumericError


class Tensor:
    """Autodiff graph node wrapping a numpy array."""

    __slots__ = ("data", "grad", "_backward", "_prev", "op")

    def __init__(self, data, prev=(), op="leaf"):
        self.data = np.asarray(data)
        self.grad = None
        self._backward = None
        self._prev = prev
        self.op = op

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def _accum(self, g):
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def backward(self):
        """Backpropagate from this (scalar) node through the whole graph."""
        if self.data.ndim != 0 and self.data.size != 1:
            raise ValueError("backward() expects a scalar output node")
        topo = _toposort(self)
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is not None:
                node._backward()

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, op={self.op!r})"


def _toposort(root):
    # Iterative DFS; UNet graphs are deep enough that recursion is unsafe.
    topo, visited = [], set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            topo.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for child in node._prev:
            if id(child) not in visited:
                stack.append((child, False))
    return topo


def as_tensor(x, dtype=None):
    if isinstance(x, Tensor):
        return x
    return Tensor(np.asarray(x, dtype=dtype))


def _unbroadcast(g, shape):
    """Sum gradient `g` down to `shape` (undo numpy broadcasting)."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


def add(a, b):
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor(a.data + b.data, (a, b), "add")

    def _backward():
        a._accum(_unbroadcast(out.grad, a.data.shape))
        b._accum(_unbroadcast(out.grad, b.data.shape))

    out._backward = _backward
    return out


def sub(a, b):
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor(a.data - b.data, (a, b), "sub")

    def _backward():
        a._accum(_unbroadcast(out.grad, a.data.shape))
        b._accum(_unbroadcast(-out.grad, b.data.shape))

    out._backward = _backward
    return out


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor(a.data * b.data, (a, b), "mul")

    def _backward():
        a._accum(_unbroadcast(out.grad * b.data, a.data.shape))
        b._accum(_unbroadcast(out.grad * a.data, b.data.shape))

    out._backward = _backward
    return out


def scale(a, s):
    """Multiply by a python scalar (no node for the scalar)."""
    a = as_tensor(a)
    out = Tensor(a.data * s, (a,), "scale")

    def _backward():
        a._accum(out.grad * s)

    out._backward = _backward
    return out


def matmul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise ValueError("matmul supports 2-d operands only")
    out = Tensor(a.data @ b.data, (a, b), "matmul")

    def _backward():
        a._accum(out.grad @ b.data.T)
        b._accum(a.data.T @ out.grad)

    out._backward = _backward
    return out


def relu(a):
    a = as_tensor(a)
    out = Tensor(np.maximum(a.data, 0.0), (a,), "relu")

    def _backward():
        # subgradient at 0 is 0
        a._accum(out.grad * (a.data > 0))

    out._backward = _backward
    return out


def reshape(a, shape):
    a = as_tensor(a)
    out = Tensor(a.data.reshape(shape), (a,), "reshape")

    def _backward():
        a._accum(out.grad.reshape(a.data.shape))

    out._backward = _backward
    return out


def transpose(a, axes):
    a = as_tensor(a)
    out = Tensor(np.transpose(a.data, axes), (a,), "transpose")
    inv = np.argsort(axes)

    def _backward():
        a._accum(np.transpose(out.grad, inv))

    out._backward = _backward
    return out


def tensor_sum(a):
    a = as_tensor(a)
    out = Tensor(np.asarray(a.data.sum()), (a,), "sum")

    def _backward():
        a._accum(np.broadcast_to(out.grad, a.data.shape).copy())

    out._backward = _backward
    return out


def softmax(a, axis=-1):
    a = as_tensor(a)
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=axis, keepdims=True)
    out = Tensor(y, (a,), "softmax")

    def _backward():
        dy = out.grad
        a._accum(y * (dy - (dy * y).sum(axis=axis, keepdims=True)))

    out._backward = _backward
    return out


def _im2col(xp, kh, kw, h, w):
    """(C, H+kh-1, W+kw-1) padded input -> (C*kh*kw, H*W) patch matrix."""
    c = xp.shape[0]
    cols = np.empty((c, kh, kw, h, w), dtype=xp.dtype)
    for i in range(kh):
        for j in range(kw):
            cols[:, i, j] = xp[:, i:i + h, j:j + w]
    return cols.reshape(c * kh * kw, h * w)


def conv2d(x, w, b):
    """Same-padded stride-1 2d convolution (cross-correlation).

    x: (C_in, H, W), w: (C_out, C_in, kh, kw) with odd kh, kw, b: (C_out,).
    """
    x, w, b = as_tensor(x), as_tensor(w), as_tensor(b)
    c_in, h, wd = x.data.shape
    c_out, c_in_w, kh, kw = w.data.shape
    if c_in != c_in_w:
        raise ValueError(f"conv2d channel mismatch: input {c_in}, kernel {c_in_w}")
    ph, pw = kh // 2, kw // 2
    xp = np.pad(x.data, ((0, 0), (ph, ph), (pw, pw)))
    cols = _im2col(xp, kh, kw, h, wd)
    wmat = w.data.reshape(c_out, -1)
    y = (wmat @ cols + b.data[:, None]).reshape(c_out, h, wd)
    out = Tensor(y, (x, w, b), "conv2d")

    def _backward():
        gout = out.grad.reshape(c_out, -1)
        w._accum((gout @ cols.T).reshape(w.data.shape))
        b._accum(gout.sum(axis=1))
        dcols = (wmat.T @ gout).reshape(c_in, kh, kw, h, wd)
        dxp = np.zeros_like(xp)
        for i in range(kh):
            for j in range(kw):
                dxp[:, i:i + h, j:j + wd] += dcols[:, i, j]
        x._accum(dxp[:, ph:ph + h, pw:pw + wd])

    out._backward = _backward
    return out


def avg_pool2(x):
    """2x2 average pooling with stride 2. Spatial dims must be even."""
    x = as_tensor(x)
    c, h, w = x.data.shape
    if h % 2 or w % 2:
        raise ValueError(f"avg_pool2 needs even spatial dims, got {h}x{w}")
    y = x.data.reshape(c, h // 2, 2, w // 2, 2).mean(axis=(2, 4))
    out = Tensor(y, (x,), "avg_pool2")

    def _backward():
        g = np.repeat(np.repeat(out.grad, 2, axis=1), 2, axis=2)
        x._accum(g * 0.25)

    out._backward = _backward
    return out


def upsample_nearest2(x):
    """Nearest-neighbor 2x spatial upsampling."""
    x = as_tensor(x)
    y = np.repeat(np.repeat(x.data, 2, axis=1), 2, axis=2)
    out = Tensor(y, (x,), "upsample_nearest2")

    def _backward():
        c, h, w = x.data.shape
        x._accum(out.grad.reshape(c, h, 2, w, 2).sum(axis=(2, 4)))

    out._backward = _backward
    return out


def group_norm(x, gamma, beta, groups, eps=1e-5):
    """Group normalization over (channels_in_group, H, W) per group.

    x: (C, H, W); gamma, beta: (C,). C must be divisible by groups.
    """
    x, gamma, beta = as_tensor(x), as_tensor(gamma), as_tensor(beta)
    c, h, w = x.data.shape
    if c % groups:
        raise ValueError(f"group_norm: {c} channels not divisible by {groups} groups")
    xg = x.data.reshape(groups, c // groups, h, w)
    mu = xg.mean(axis=(1, 2, 3), keepdims=True)
    var = xg.var(axis=(1, 2, 3), keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = ((xg - mu) * inv_std).reshape(c, h, w)
    y = xhat * gamma.data[:, None, None] + beta.data[:, None, None]
    out = Tensor(y, (x, gamma, beta), "group_norm")
    n = (c // groups) * h * w

    def _backward():
        dy = out.grad
        gamma._accum((dy * xhat).sum(axis=(1, 2)))
        beta._accum(dy.sum(axis=(1, 2)))
        dxhat = (dy * gamma.data[:, None, None]).reshape(groups, c // groups, h, w)
        xhat_g = xhat.reshape(groups, c // groups, h, w)
        s1 = dxhat.sum(axis=(1, 2, 3), keepdims=True)
        s2 = (dxhat * xhat_g).sum(axis=(1, 2, 3), keepdims=True)
        dx = inv_std / n * (n * dxhat - s1 - xhat_g * s2)
        x._accum(dx.reshape(c, h, w))

    out._backward = _backward
    return out


def affine(x, w, b):
    """x @ w + b with x: (N, D_in), w: (D_in, D_out), b: (D_out,)."""
    return add(matmul(x, w), b)


def masked_mse(pred, target, mask):
    """Mean squared error over entries where broadcast `mask` is 1.

    target and mask are constants (no gradient flows into them).
    pred: (C, H, W); mask broadcastable to pred's shape, entries in {0, 1}.
    """
    pred = as_tensor(pred)
    target = np.asarray(target, dtype=pred.data.dtype)
    mask = np.asarray(mask, dtype=pred.data.dtype)
    full = np.broadcast_to(mask, pred.data.shape)
    n_valid = float(full.sum())
    if n_valid == 0.0:
        return Tensor(np.asarray(0.0, dtype=pred.data.dtype)), 0
    diff = mul(sub(pred, Tensor(target)), Tensor(full))
    loss = scale(tensor_sum(mul(diff, diff)), 1.0 / n_valid)
    return loss, int(n_valid)


def check_finite(t, where):
    """Raise NumericError naming `where` if `t` holds non-finite values."""
    data = t.data if isinstance(t, Tensor) else t
    if not np.isfinite(data).all():
        raise NumericError(f"non-finite values after {where}")
    return t
