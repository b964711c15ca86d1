"""Reverse-mode differentiation over a fixed, closed set of array operations.

The expression graph supports exactly the primitives the composite
multi-fidelity model needs: affine maps, relu, tanh, elementwise +/-/*,
square, column concatenation, and full reductions (sum, mean).  The
logistic blend is composed from these (``0.5 + 0.5*tanh(0.5*x)``).
Anything outside the set is rejected when the expression is built, so a
loss can never silently contain an undifferentiated operation.

All values are float64 ndarrays; gradients have the same shape as the
value they belong to.  ``Tensor.backward()`` runs one reverse sweep and
leaves gradients on every node of the graph, including leaves created
with :func:`constant`.
"""

import numpy as np

from .errors import UnsupportedPrimitiveError


def _unbroadcast(grad, shape):
    """Sum ``grad`` down to ``shape``, undoing numpy broadcasting."""
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


class Tensor:
    __slots__ = ("value", "grad", "_parents", "_backward")

    def __init__(self, value, parents=(), backward=None):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = None
        self._parents = parents
        self._backward = backward

    @property
    def shape(self):
        return self.value.shape

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return mul(self, -1.0)

    def __truediv__(self, other):
        raise UnsupportedPrimitiveError("division is not a supported primitive")

    __rtruediv__ = __truediv__

    def __pow__(self, other):
        raise UnsupportedPrimitiveError(
            "pow is not a supported primitive; use square()"
        )

    def __matmul__(self, other):
        raise UnsupportedPrimitiveError(
            "bare matmul is not a supported primitive; use affine()"
        )

    def backward(self):
        """Reverse sweep from a scalar node; accumulates ``grad`` everywhere."""
        if self.value.size != 1:
            raise ValueError("backward() requires a scalar (size-1) node")
        order = []
        seen = set()
        stack = [(self, False)]
        while stack:  # iterative DFS: graph depth is unbounded in principle
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                stack.append((parent, False))
        for node in order:
            node.grad = np.zeros_like(node.value)
        self.grad = np.ones_like(self.value)
        for node in reversed(order):
            if node._backward is not None:
                node._backward(node.grad)

    def __repr__(self):
        return f"Tensor(shape={self.value.shape})"


def _as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def constant(value):
    """Leaf node holding data or a parameter vector."""
    return Tensor(value)


def add(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    out = Tensor(a.value + b.value, (a, b))

    def bw(g):
        a.grad += _unbroadcast(g, a.value.shape)
        b.grad += _unbroadcast(g, b.value.shape)

    out._backward = bw
    return out


def sub(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    out = Tensor(a.value - b.value, (a, b))

    def bw(g):
        a.grad += _unbroadcast(g, a.value.shape)
        b.grad -= _unbroadcast(g, b.value.shape)

    out._backward = bw
    return out


def mul(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    out = Tensor(a.value * b.value, (a, b))

    def bw(g):
        a.grad += _unbroadcast(g * b.value, a.value.shape)
        b.grad += _unbroadcast(g * a.value, b.value.shape)

    out._backward = bw
    return out


def square(a):
    a = _as_tensor(a)
    out = Tensor(np.square(a.value), (a,))

    def bw(g):
        a.grad += 2.0 * a.value * g

    out._backward = bw
    return out


def relu(a):
    """max(x, 0); the subgradient at exactly 0 is taken as 0."""
    a = _as_tensor(a)
    out = Tensor(np.maximum(a.value, 0.0), (a,))
    mask = a.value > 0.0

    def bw(g):
        a.grad += mask * g

    out._backward = bw
    return out


def tanh(a):
    a = _as_tensor(a)
    y = np.tanh(a.value)
    out = Tensor(y, (a,))

    def bw(g):
        a.grad += (1.0 - y * y) * g

    out._backward = bw
    return out


def mean(a):
    a = _as_tensor(a)
    out = Tensor(np.mean(a.value), (a,))
    n = a.value.size

    def bw(g):
        a.grad += g / n

    out._backward = bw
    return out


def asum(a):
    a = _as_tensor(a)
    out = Tensor(np.sum(a.value), (a,))

    def bw(g):
        a.grad += g

    out._backward = bw
    return out


def affine(x, w, b):
    """x @ w + b for x of shape (n, fan_in), w (fan_in, fan_out), b (fan_out,)."""
    x, w, b = _as_tensor(x), _as_tensor(w), _as_tensor(b)
    if x.value.ndim != 2 or w.value.ndim != 2 or b.value.ndim != 1:
        raise ValueError("affine expects x (n,k), w (k,m), b (m,)")
    if x.value.shape[1] != w.value.shape[0] or w.value.shape[1] != b.value.shape[0]:
        raise ValueError(
            f"affine shape mismatch: x {x.value.shape}, w {w.value.shape}, "
            f"b {b.value.shape}"
        )
    out = Tensor(x.value @ w.value + b.value, (x, w, b))

    def bw(g):
        x.grad += g @ w.value.T
        w.grad += x.value.T @ g
        b.grad += g.sum(axis=0)

    out._backward = bw
    return out


def concat_cols(a, b):
    """Column-wise concatenation of two (n, *) matrices."""
    a, b = _as_tensor(a), _as_tensor(b)
    if a.value.ndim != 2 or b.value.ndim != 2 or a.value.shape[0] != b.value.shape[0]:
        raise ValueError("concat_cols expects two matrices with equal row counts")
    out = Tensor(np.concatenate([a.value, b.value], axis=1), (a, b))
    split = a.value.shape[1]

    def bw(g):
        a.grad += g[:, :split]
        b.grad += g[:, split:]

    out._backward = bw
    return out


def logistic(a):
    """1 / (1 + exp(-x)), composed from the supported primitives."""
    return tanh(mul(a, 0.5)) * 0.5 + 0.5
