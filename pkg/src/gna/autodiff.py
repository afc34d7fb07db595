"""Tape-based reverse-mode autodiff over float64 numpy arrays.

A Wengert list at array-op granularity: each op appends one backward
closure to the active tape, and backward() replays the list in exact
reverse order. One tape may be active at a time and supports a single
backward pass; double backward is unsupported and raises.
"""

import numpy as np

from . import kernels

_ACTIVE = None


def _wrap(x):
    if isinstance(x, Tensor):
        return x
    return Tensor(x)


def _sum_to(g, shape):
    """Reduce a broadcast gradient back down to `shape`."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, s in enumerate(shape):
        if s == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


def _acc(t, g):
    if t.requires_grad:
        t.grad = g if t.grad is None else t.grad + g


def _tracked(*ts):
    return _ACTIVE is not None and any(t.requires_grad for t in ts)


def _record(out, bwd):
    _ACTIVE.nodes.append(bwd)
    out.requires_grad = True


class Tensor:
    __slots__ = ("data", "grad", "requires_grad")

    def __init__(self, data, requires_grad=False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = bool(requires_grad)

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    def __add__(self, other):
        return add(self, _wrap(other))

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, _wrap(other))

    def __rsub__(self, other):
        return sub(_wrap(other), self)

    def __mul__(self, other):
        return mul(self, _wrap(other))

    __rmul__ = __mul__

    def __neg__(self):
        return mul(self, _wrap(-1.0))

    def __matmul__(self, other):
        return matmul(self, _wrap(other))


class Tape:
    def __init__(self):
        self.nodes = []
        self._consumed = False

    def __enter__(self):
        global _ACTIVE
        if _ACTIVE is not None:
            raise RuntimeError("a tape is already active")
        _ACTIVE = self
        return self

    def __exit__(self, *exc):
        global _ACTIVE
        _ACTIVE = None
        return False

    def backward(self, loss):
        if self._consumed:
            raise RuntimeError(
                "tape already consumed; double backward is unsupported"
            )
        if loss.data.size != 1:
            raise ValueError("backward target must be a scalar")
        self._consumed = True
        loss.grad = np.ones_like(loss.data)
        for bwd in reversed(self.nodes):
            bwd()
        self.nodes.clear()


# ------------------------------------------------------------------- ops


def add(a, b):
    a, b = _wrap(a), _wrap(b)
    out = Tensor(a.data + b.data)
    if _tracked(a, b):

        def bwd():
            g = out.grad
            if g is None:
                return
            if a.requires_grad:
                _acc(a, _sum_to(g, a.data.shape))
            if b.requires_grad:
                _acc(b, _sum_to(g, b.data.shape))

        _record(out, bwd)
    return out


def sub(a, b):
    a, b = _wrap(a), _wrap(b)
    out = Tensor(a.data - b.data)
    if _tracked(a, b):

        def bwd():
            g = out.grad
            if g is None:
                return
            if a.requires_grad:
                _acc(a, _sum_to(g, a.data.shape))
            if b.requires_grad:
                _acc(b, _sum_to(-g, b.data.shape))

        _record(out, bwd)
    return out


def mul(a, b):
    a, b = _wrap(a), _wrap(b)
    out = Tensor(a.data * b.data)
    if _tracked(a, b):

        def bwd():
            g = out.grad
            if g is None:
                return
            if a.requires_grad:
                _acc(a, _sum_to(g * b.data, a.data.shape))
            if b.requires_grad:
                _acc(b, _sum_to(g * a.data, b.data.shape))

        _record(out, bwd)
    return out


def matmul(a, b):
    a, b = _wrap(a), _wrap(b)
    out = Tensor(np.matmul(a.data, b.data))
    if _tracked(a, b):

        def bwd():
            g = out.grad
            if g is None:
                return
            if a.requires_grad:
                ga = np.matmul(g, np.swapaxes(b.data, -1, -2))
                _acc(a, _sum_to(ga, a.data.shape))
            if b.requires_grad:
                gb = np.matmul(np.swapaxes(a.data, -1, -2), g)
                _acc(b, _sum_to(gb, b.data.shape))

        _record(out, bwd)
    return out


def reshape(x, shape):
    out = Tensor(x.data.reshape(shape))
    if _tracked(x):

        def bwd():
            if out.grad is not None:
                _acc(x, out.grad.reshape(x.data.shape))

        _record(out, bwd)
    return out


def transpose_last2(x):
    out = Tensor(np.swapaxes(x.data, -1, -2))
    if _tracked(x):

        def bwd():
            if out.grad is not None:
                _acc(x, np.swapaxes(out.grad, -1, -2))

        _record(out, bwd)
    return out


def index_rows(w, idx):
    """w (V,h), integer idx (...) -> out (...,h). Scatter-add backward."""
    idx = np.asarray(idx)
    out = Tensor(w.data[idx])
    if _tracked(w):

        def bwd():
            g = out.grad
            if g is None:
                return
            dw = np.zeros_like(w.data)
            np.add.at(dw, idx.reshape(-1), g.reshape(-1, w.data.shape[1]))
            _acc(w, dw)

        _record(out, bwd)
    return out


def slice_rows(w, n):
    """First n rows of a (R,h) parameter; backward zero-pads the rest."""
    out = Tensor(w.data[:n])
    if _tracked(w):

        def bwd():
            g = out.grad
            if g is None:
                return
            dw = np.zeros_like(w.data)
            dw[:n] = g
            _acc(w, dw)

        _record(out, bwd)
    return out


def layernorm(x, gamma, beta, eps=1e-5):
    out_data, mean, rstd = kernels.layernorm_fwd(x.data, gamma.data, beta.data, eps)
    out = Tensor(out_data)
    if _tracked(x, gamma, beta):

        def bwd():
            g = out.grad
            if g is None:
                return
            dx, dg, db = kernels.layernorm_bwd(g, x.data, gamma.data, mean, rstd)
            if x.requires_grad:
                _acc(x, dx)
            _acc(gamma, dg)
            _acc(beta, db)

        _record(out, bwd)
    return out


def gelu(x):
    out = Tensor(kernels.gelu_fwd(x.data))
    if _tracked(x):

        def bwd():
            g = out.grad
            if g is None:
                return
            _acc(x, kernels.gelu_bwd(g, x.data))

        _record(out, bwd)
    return out


def causal_softmax(scores):
    """(B,L,L) -> attention probs, row i a distribution over j<=i."""
    probs = kernels.causal_softmax_fwd(scores.data)
    out = Tensor(probs)
    if _tracked(scores):

        def bwd():
            g = out.grad
            if g is None:
                return
            _acc(scores, kernels.causal_softmax_bwd(g, probs))

        _record(out, bwd)
    return out


def log_softmax(x):
    """Log softmax over the last axis."""
    m = x.data.max(axis=-1, keepdims=True)
    s = x.data - m
    lse = np.log(np.exp(s).sum(axis=-1, keepdims=True))
    out = Tensor(s - lse)
    if _tracked(x):
        p = np.exp(out.data)

        def bwd():
            g = out.grad
            if g is None:
                return
            _acc(x, g - p * g.sum(axis=-1, keepdims=True))

        _record(out, bwd)
    return out


def gather_last(x, idx):
    """x (...,V), integer idx (...) -> out (...): x[..., idx]."""
    ii = np.asarray(idx)[..., None]
    out = Tensor(np.take_along_axis(x.data, ii, axis=-1)[..., 0])
    if _tracked(x):

        def bwd():
            g = out.grad
            if g is None:
                return
            dx = np.zeros_like(x.data)
            np.put_along_axis(dx, ii, g[..., None], axis=-1)
            _acc(x, dx)

        _record(out, bwd)
    return out


def sum_(x, axis=None):
    out = Tensor(x.data.sum(axis=axis))
    if _tracked(x):

        def bwd():
            g = out.grad
            if g is None:
                return
            if axis is None:
                _acc(x, np.broadcast_to(g, x.data.shape))
            else:
                _acc(x, np.broadcast_to(np.expand_dims(g, axis), x.data.shape))

        _record(out, bwd)
    return out


def mean_(x, axis=None):
    n = x.data.size if axis is None else x.data.shape[axis]
    return mul(sum_(x, axis=axis), _wrap(1.0 / n))


def logsumexp(x, axis):
    """Stable log-sum-exp over one axis (axis removed from the output)."""
    m = x.data.max(axis=axis, keepdims=True)
    e = np.exp(x.data - m)
    ssum = e.sum(axis=axis, keepdims=True)
    out = Tensor(np.squeeze(np.log(ssum) + m, axis=axis))
    if _tracked(x):
        w = e / ssum

        def bwd():
            g = out.grad
            if g is None:
                return
            _acc(x, np.expand_dims(g, axis) * w)

        _record(out, bwd)
    return out
