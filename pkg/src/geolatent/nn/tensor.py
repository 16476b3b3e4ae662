"""Reverse-mode autodiff over float64 numpy arrays.

Small graph-of-closures engine: every op records its parents and a backward
closure; Tensor.backward() runs the closures in reverse topological order.
Only float64 is supported, matching the precision the constraint residual
targets require.
"""

from __future__ import annotations

import numpy as np


def _as_array(value) -> np.ndarray:
    return np.asarray(value, dtype=np.float64)


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum grad down to `shape` after numpy broadcasting."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for ax, size in enumerate(shape):
        if size == 1 and grad.shape[ax] != 1:
            grad = grad.sum(axis=ax, keepdims=True)
    return grad.reshape(shape)


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False):
        self.data = _as_array(data)
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = ()
        self._backward = None

    # -- graph plumbing ----------------------------------------------------

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def _accumulate(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def backward(self) -> None:
        if self.data.size != 1:
            raise ValueError(f"backward() needs a scalar, got shape {self.shape}")
        topo: list[Tensor] = []
        seen = set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in seen:
                    stack.append((p, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other):
        other = other if isinstance(other, Tensor) else Tensor(other)
        out = _op(np.add(self.data, other.data), (self, other))
        if out._parents:
            def bwd(g):
                _send(self, _unbroadcast(g, self.data.shape))
                _send(other, _unbroadcast(g, other.data.shape))
            out._backward = bwd
        return out

    __radd__ = __add__

    def __neg__(self):
        out = _op(-self.data, (self,))
        if out._parents:
            out._backward = lambda g: _send(self, -g)
        return out

    def __sub__(self, other):
        other = other if isinstance(other, Tensor) else Tensor(other)
        out = _op(self.data - other.data, (self, other))
        if out._parents:
            def bwd(g):
                _send(self, _unbroadcast(g, self.data.shape))
                _send(other, _unbroadcast(-g, other.data.shape))
            out._backward = bwd
        return out

    def __rsub__(self, other):
        return Tensor(other) - self

    def __mul__(self, other):
        other = other if isinstance(other, Tensor) else Tensor(other)
        out = _op(self.data * other.data, (self, other))
        if out._parents:
            def bwd(g):
                _send(self, _unbroadcast(g * other.data, self.data.shape))
                _send(other, _unbroadcast(g * self.data, other.data.shape))
            out._backward = bwd
        return out

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = other if isinstance(other, Tensor) else Tensor(other)
        out = _op(self.data / other.data, (self, other))
        if out._parents:
            def bwd(g):
                _send(self, _unbroadcast(g / other.data, self.data.shape))
                _send(other, _unbroadcast(-g * self.data / other.data ** 2,
                                          other.data.shape))
            out._backward = bwd
        return out

    def __rtruediv__(self, other):
        return Tensor(other) / self

    def __pow__(self, exponent: float):
        out = _op(self.data ** exponent, (self,))
        if out._parents:
            out._backward = lambda g: _send(
                self, g * exponent * self.data ** (exponent - 1))
        return out

    def __matmul__(self, other):
        other = other if isinstance(other, Tensor) else Tensor(other)
        out = _op(self.data @ other.data, (self, other))
        if out._parents:
            def bwd(g):
                _send(self, g @ other.data.T)
                _send(other, self.data.T @ g)
            out._backward = bwd
        return out

    def __getitem__(self, key):
        out = _op(self.data[key], (self,))
        if out._parents:
            def bwd(g):
                full = np.zeros_like(self.data)
                np.add.at(full, key, g)
                _send(self, full)
            out._backward = bwd
        return out

    # -- shape ops -----------------------------------------------------------

    def reshape(self, *shape):
        out = _op(self.data.reshape(*shape), (self,))
        if out._parents:
            out._backward = lambda g: _send(self, g.reshape(self.data.shape))
        return out

    @property
    def T(self):
        out = _op(self.data.T, (self,))
        if out._parents:
            out._backward = lambda g: _send(self, g.T)
        return out

    def sum(self, axis=None, keepdims=False):
        out = _op(self.data.sum(axis=axis, keepdims=keepdims), (self,))
        if out._parents:
            def bwd(g):
                if axis is None:
                    _send(self, np.broadcast_to(g, self.data.shape).copy())
                else:
                    gg = g if keepdims else np.expand_dims(g, axis)
                    _send(self, np.broadcast_to(gg, self.data.shape).copy())
            out._backward = bwd
        return out

    def mean(self, axis=None, keepdims=False):
        count = self.data.size if axis is None else self.data.shape[axis]
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / count)

    # -- elementwise nonlinearities -------------------------------------------

    def exp(self):
        val = np.exp(self.data)
        out = _op(val, (self,))
        if out._parents:
            out._backward = lambda g: _send(self, g * val)
        return out

    def log(self):
        out = _op(np.log(self.data), (self,))
        if out._parents:
            out._backward = lambda g: _send(self, g / self.data)
        return out

    def sqrt(self):
        val = np.sqrt(self.data)
        out = _op(val, (self,))
        if out._parents:
            out._backward = lambda g: _send(self, g * 0.5 / val)
        return out

    def tanh(self):
        val = np.tanh(self.data)
        out = _op(val, (self,))
        if out._parents:
            out._backward = lambda g: _send(self, g * (1.0 - val * val))
        return out

    def relu(self):
        out = _op(np.maximum(self.data, 0.0), (self,))
        if out._parents:
            mask = self.data > 0.0
            out._backward = lambda g: _send(self, g * mask)
        return out

    def sigmoid(self):
        x = self.data
        val = np.where(x >= 0, 1.0 / (1.0 + np.exp(-np.abs(x))),
                       np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))))
        out = _op(val, (self,))
        if out._parents:
            out._backward = lambda g: _send(self, g * val * (1.0 - val))
        return out

    def softplus(self):
        x = self.data
        val = np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))
        out = _op(val, (self,))
        if out._parents:
            sig = 1.0 / (1.0 + np.exp(-np.abs(x)))
            sig = np.where(x >= 0, sig, 1.0 - sig)
            out._backward = lambda g: _send(self, g * sig)
        return out

    def abs(self):
        out = _op(np.abs(self.data), (self,))
        if out._parents:
            sign = np.sign(self.data)
            out._backward = lambda g: _send(self, g * sign)
        return out

    def clip(self, lo: float, hi: float):
        """Clamp values; gradient passes only where unclamped."""
        out = _op(np.clip(self.data, lo, hi), (self,))
        if out._parents:
            mask = (self.data > lo) & (self.data < hi)
            out._backward = lambda g: _send(self, g * mask)
        return out

    def repeat_rows(self, k: int):
        """Each row repeated k times consecutively (2-D only)."""
        out = _op(np.repeat(self.data, k, axis=0), (self,))
        if out._parents:
            def bwd(g):
                _send(self, g.reshape(self.data.shape[0], k, -1).sum(axis=1)
                      .reshape(self.data.shape))
            out._backward = bwd
        return out


def _op(value: np.ndarray, parents: tuple) -> Tensor:
    out = Tensor(value)
    track = tuple(p for p in parents if p.requires_grad or p._parents)
    if track:
        out._parents = parents
        out.requires_grad = True
    return out


def _send(node: Tensor, g: np.ndarray) -> None:
    if node.requires_grad or node._parents:
        node._accumulate(g)


def parameter(data, rng: np.random.Generator | None = None,
              scale: float | None = None) -> Tensor:
    """Trainable leaf tensor; with rng and scale, Gaussian-initialized."""
    if rng is not None:
        data = rng.standard_normal(data) * scale
    return Tensor(data, requires_grad=True)


def concat(tensors, axis: int = 1) -> Tensor:
    datas = [t.data for t in tensors]
    out = _op(np.concatenate(datas, axis=axis), tuple(tensors))
    if out._parents:
        sizes = [d.shape[axis] for d in datas]
        offsets = np.cumsum([0] + sizes)

        def bwd(g):
            for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
                idx = [slice(None)] * g.ndim
                idx[axis] = slice(lo, hi)
                _send(t, g[tuple(idx)])
        out._backward = bwd
    return out


def backward(loss: Tensor) -> None:
    """Populate grads of every reachable leaf from a scalar loss."""
    loss.backward()
