"""Dense-matrix reverse-mode automatic differentiation.

Every quantity is a 2-D float64 array wrapped in a :class:`Value`.  Operations
record their inputs and a closure mapping the output gradient to input
gradients; :func:`backward` walks the recorded graph in reverse topological
order.  Gradients accumulate on leaves across calls until :meth:`Value.zero_grad`.

The normalized adjacency and sparse node features are constants, so they enter
through :func:`spmm`, whose backward only reaches the dense operand.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

__all__ = [
    "Value", "ShapeError", "DomainError",
    "as_value", "backward", "grad_check",
    "matmul", "spmm", "add", "sub", "mul", "div", "neg", "transpose",
    "exp", "log", "tanh", "sigmoid", "softplus", "relu", "abs_", "square",
    "clamp", "concat", "sum_", "mean", "logsumexp", "custom_op",
]


class ShapeError(ValueError):
    pass


class DomainError(ValueError):
    pass


def _as_array(data):
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim != 2:
        raise ShapeError(f"Value data must be 2-D, got shape {arr.shape}")
    return arr


class Value:
    """A dense matrix node in a computation graph."""

    __array_priority__ = 1000  # make ndarray <op> Value dispatch to Value

    def __init__(self, data, requires_grad=False, parents=(), backward_fn=None, op=""):
        self.data = _as_array(data)
        self.requires_grad = bool(requires_grad)
        self._parents = tuple(parents)
        # only leaves keep a gradient buffer; intermediates are transient in backward()
        self.grad = np.zeros_like(self.data) if self.requires_grad and not self._parents else None
        self._backward_fn = backward_fn
        self.op = op

    @property
    def shape(self):
        return self.data.shape

    @property
    def is_leaf(self):
        return not self._parents

    def zero_grad(self):
        if self.requires_grad and not self._parents:
            self.grad = np.zeros_like(self.data)

    def detach(self):
        return Value(self.data.copy())

    def item(self):
        if self.data.shape != (1, 1):
            raise ShapeError(f"item() needs a 1x1 Value, got {self.data.shape}")
        return float(self.data[0, 0])

    def numpy(self):
        return self.data

    def __repr__(self):
        return f"Value(shape={self.shape}, op={self.op or 'leaf'}, requires_grad={self.requires_grad})"

    # operator sugar
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __rmatmul__(self, other):
        return matmul(other, self)

    def __neg__(self):
        return neg(self)

    def __getitem__(self, key):
        return _getitem(self, key)

    @property
    def T(self):
        return transpose(self)


def as_value(x):
    return x if isinstance(x, Value) else Value(x)


def custom_op(data, parents, backward_fn, op="custom"):
    """Build a Value from a forward result and a gradient closure.

    ``backward_fn(g)`` must return one gradient (or None) per parent.  The
    closure is dropped when no parent requires a gradient.
    """
    parents = tuple(parents)
    needs = any(p.requires_grad for p in parents)
    if not needs:
        return Value(data, op=op)
    return Value(data, requires_grad=True, parents=parents, backward_fn=backward_fn, op=op)


def _unbroadcast(grad, shape):
    if grad.shape == shape:
        return grad
    if shape[0] == 1 and grad.shape[0] != 1:
        grad = grad.sum(axis=0, keepdims=True)
    if shape[1] == 1 and grad.shape[1] != 1:
        grad = grad.sum(axis=1, keepdims=True)
    return grad


def _broadcast_shape(a, b, opname):
    sa, sb = a.shape, b.shape
    out = []
    for da, db in zip(sa, sb):
        if da == db or db == 1:
            out.append(da)
        elif da == 1:
            out.append(db)
        else:
            raise ShapeError(f"{opname}: incompatible shapes {sa} and {sb}")
    return tuple(out)


def add(a, b):
    a, b = as_value(a), as_value(b)
    _broadcast_shape(a, b, "add")
    return custom_op(a.data + b.data, (a, b),
                     lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)), "add")


def sub(a, b):
    a, b = as_value(a), as_value(b)
    _broadcast_shape(a, b, "sub")
    return custom_op(a.data - b.data, (a, b),
                     lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)), "sub")


def mul(a, b):
    a, b = as_value(a), as_value(b)
    _broadcast_shape(a, b, "mul")
    return custom_op(a.data * b.data, (a, b),
                     lambda g: (_unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)),
                     "mul")


def div(a, b):
    a, b = as_value(a), as_value(b)
    _broadcast_shape(a, b, "div")
    if np.any(b.data == 0):
        raise DomainError("div: division by zero")
    out = a.data / b.data

    def backward_fn(g):
        return _unbroadcast(g / b.data, a.shape), _unbroadcast(-g * out / b.data, b.shape)

    return custom_op(out, (a, b), backward_fn, "div")


def neg(a):
    a = as_value(a)
    return custom_op(-a.data, (a,), lambda g: (-g,), "neg")


def matmul(a, b):
    a, b = as_value(a), as_value(b)
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: incompatible shapes {a.shape} and {b.shape}")
    return custom_op(a.data @ b.data, (a, b),
                     lambda g: (g @ b.data.T if a.requires_grad else None,
                                a.data.T @ g if b.requires_grad else None),
                     "matmul")


def spmm(const, b):
    """Product of a constant (sparse or dense ndarray) matrix with a Value."""
    b = as_value(b)
    if const.shape[1] != b.shape[0]:
        raise ShapeError(f"spmm: incompatible shapes {const.shape} and {b.shape}")
    out = const @ b.data
    if sp.issparse(out):
        out = out.toarray()
    return custom_op(np.asarray(out), (b,), lambda g: (np.asarray(const.T @ g),), "spmm")


def transpose(a):
    a = as_value(a)
    return custom_op(a.data.T, (a,), lambda g: (g.T,), "transpose")


def exp(a):
    a = as_value(a)
    out = np.exp(a.data)
    return custom_op(out, (a,), lambda g: (g * out,), "exp")


def log(a):
    a = as_value(a)
    if np.any(a.data <= 0):
        raise DomainError("log: non-positive input")
    return custom_op(np.log(a.data), (a,), lambda g: (g / a.data,), "log")


def tanh(a):
    a = as_value(a)
    out = np.tanh(a.data)
    return custom_op(out, (a,), lambda g: (g * (1.0 - out * out),), "tanh")


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def sigmoid(a):
    a = as_value(a)
    out = _sigmoid(a.data)
    return custom_op(out, (a,), lambda g: (g * out * (1.0 - out),), "sigmoid")


def softplus(a):
    a = as_value(a)
    out = np.logaddexp(0.0, a.data)
    return custom_op(out, (a,), lambda g: (g * _sigmoid(a.data),), "softplus")


def relu(a):
    a = as_value(a)
    mask = a.data > 0
    return custom_op(a.data * mask, (a,), lambda g: (g * mask,), "relu")


def abs_(a):
    a = as_value(a)
    return custom_op(np.abs(a.data), (a,), lambda g: (g * np.sign(a.data),), "abs")


def square(a):
    a = as_value(a)
    return custom_op(a.data * a.data, (a,), lambda g: (2.0 * g * a.data,), "square")


def clamp(a, lo=None, hi=None):
    """Clip to [lo, hi]; the gradient is zero where clipping was active."""
    a = as_value(a)
    out = np.clip(a.data, lo, hi)
    inside = out == a.data
    return custom_op(out, (a,), lambda g: (g * inside,), "clamp")


def concat(values, axis=1):
    """Concatenate along columns (axis=1) or rows (axis=0)."""
    values = [as_value(v) for v in values]
    other = 1 - axis
    ref = values[0].shape[other]
    for v in values:
        if v.shape[other] != ref:
            raise ShapeError(f"concat(axis={axis}): incompatible shapes "
                             f"{[v.shape for v in values]}")
    out = np.concatenate([v.data for v in values], axis=axis)
    bounds = np.cumsum([0] + [v.shape[axis] for v in values])

    def backward_fn(g):
        if axis == 1:
            return tuple(g[:, bounds[i]:bounds[i + 1]] for i in range(len(values)))
        return tuple(g[bounds[i]:bounds[i + 1], :] for i in range(len(values)))

    return custom_op(out, values, backward_fn, "concat")


def _getitem(a, key):
    out = a.data[key]
    if out.ndim != 2:
        raise ShapeError("indexing must keep two dimensions; use slices")

    basic = isinstance(key, slice) or (
        isinstance(key, tuple) and all(isinstance(k, (slice, int)) for k in key))

    def backward_fn(g):
        full = np.zeros_like(a.data)
        if basic:
            full[key] += g
        else:
            np.add.at(full, key, g)
        return (full,)

    return custom_op(out, (a,), backward_fn, "getitem")


def sum_(a, axis=None):
    a = as_value(a)
    if axis is None:
        return custom_op(a.data.sum().reshape(1, 1), (a,),
                         lambda g: (np.broadcast_to(g, a.shape).copy(),), "sum")
    out = a.data.sum(axis=axis, keepdims=True)
    return custom_op(out, (a,), lambda g: (np.broadcast_to(g, a.shape).copy(),), "sum")


def mean(a, axis=None):
    a = as_value(a)
    count = a.data.size if axis is None else a.shape[axis]
    return mul(sum_(a, axis), 1.0 / count)


def logsumexp(a, axis=1):
    a = as_value(a)
    m = a.data.max(axis=axis, keepdims=True)
    shifted = np.exp(a.data - m)
    total = shifted.sum(axis=axis, keepdims=True)
    out = m + np.log(total)
    return custom_op(out, (a,), lambda g: (g * shifted / total,), "logsumexp")


def _toposort(root):
    order, seen = [], set()
    stack = [(root, False)]
    while stack:
        node, done = stack.pop()
        if done:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))
    return order


def backward(root):
    """Accumulate d(root)/d(leaf) into every requires-grad leaf's ``grad``."""
    if root.shape != (1, 1):
        raise ShapeError(f"backward needs a scalar (1x1) root, got {root.shape}")
    if not root.requires_grad:
        return
    grads = {id(root): np.ones((1, 1))}
    for node in reversed(_toposort(root)):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node.is_leaf:
            node.grad += g
            continue
        for parent, pg in zip(node._parents, node._backward_fn(g)):
            if pg is None or not parent.requires_grad:
                continue
            key = id(parent)
            if key in grads:
                grads[key] = grads[key] + pg
            else:
                grads[key] = pg


def grad_check(f, params, h=1e-5, floor=1e-6):
    """Max relative error between AD gradients and central differences.

    ``f`` is a zero-argument callable returning a scalar Value built from
    ``params``; it must be deterministic (freeze any noise it draws).
    """
    if not 1e-6 <= h <= 1e-4:
        raise ValueError(f"step h={h} outside [1e-6, 1e-4]")
    for p in params:
        p.zero_grad()
    out = f()
    if not np.isfinite(out.data).all():
        raise FloatingPointError("f is not finite at the base point")
    backward(out)
    worst = 0.0
    for k, p in enumerate(params):
        ad = p.grad.copy()
        for idx in np.ndindex(p.shape):
            orig = p.data[idx]
            p.data[idx] = orig + h
            fp = f().item()
            p.data[idx] = orig - h
            fm = f().item()
            p.data[idx] = orig
            if not (np.isfinite(fp) and np.isfinite(fm)):
                raise FloatingPointError(f"f not finite when perturbing param {k} at {idx}")
            fd = (fp - fm) / (2.0 * h)
            denom = max(abs(fd), abs(ad[idx]), floor)
            worst = max(worst, abs(fd - ad[idx]) / denom)
    for p in params:
        p.zero_grad()
    return worst
