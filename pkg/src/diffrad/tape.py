"""Reverse-mode autodiff tape over numpy arrays.

Nodes are recorded in forward order (inputs precede consumers), so one
reversed sweep propagates adjoints to every parameter leaf. A Tape is
built per training step and dropped afterwards. Only the op set the
fields and networks need is provided.
"""

import numpy as np


class Var:
    """Tape node: value array, accumulated adjoint, backward closure."""

    __slots__ = ("data", "grad", "_backward", "_parents", "tape")
    __array_ufunc__ = None

    def __init__(self, data, tape=None, parents=(), backward=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.tape = tape
        self._parents = parents
        self._backward = backward
        if tape is not None:
            tape.nodes.append(self)

    @property
    def shape(self):
        return self.data.shape

    def _acc(self, g):
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g


class Tape:
    def __init__(self):
        self.nodes = []

    def var(self, data):
        """Leaf with gradient tracking (parameters)."""
        return Var(data, tape=self)

    def backward(self, loss, seed_grad=None):
        """Adjoints of scalar `loss` (or of <outputs, seed_grad>)."""
        if loss.tape is not self:
            raise ValueError("backward: node does not belong to this tape")
        for n in self.nodes:
            n.grad = None
        loss.grad = (
            np.ones_like(loss.data) if seed_grad is None else np.asarray(seed_grad, dtype=np.float64)
        )
        for n in reversed(self.nodes):
            if n.grad is not None and n._backward is not None:
                n._backward(n.grad)

    def clear(self):
        self.nodes.clear()


def _tape_of(*xs):
    for x in xs:
        if isinstance(x, Var) and x.tape is not None:
            return x.tape
    raise ValueError("no tape among operands")


def _unbroadcast(g, shape):
    """Sum g down to `shape` (inverse of numpy broadcasting)."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for i, s in enumerate(shape):
        if s == 1 and g.shape[i] != 1:
            g = g.sum(axis=i, keepdims=True)
    return g


def add(a, b):
    av = a.data if isinstance(a, Var) else np.asarray(a, dtype=np.float64)
    bv = b.data if isinstance(b, Var) else np.asarray(b, dtype=np.float64)
    t = _tape_of(a, b)

    def backward(g):
        if isinstance(a, Var):
            a._acc(_unbroadcast(g, av.shape))
        if isinstance(b, Var):
            b._acc(_unbroadcast(g, bv.shape))

    return Var(av + bv, t, (a, b), backward)


def sub(a, b):
    if isinstance(b, Var):
        return add(a, mul(b, -1.0))
    return add(a, -np.asarray(b, dtype=np.float64))


def mul(a, b):
    av = a.data if isinstance(a, Var) else np.asarray(a, dtype=np.float64)
    bv = b.data if isinstance(b, Var) else np.asarray(b, dtype=np.float64)
    t = _tape_of(a, b)

    def backward(g):
        if isinstance(a, Var):
            a._acc(_unbroadcast(g * bv, av.shape))
        if isinstance(b, Var):
            b._acc(_unbroadcast(g * av, bv.shape))

    return Var(av * bv, t, (a, b), backward)


def matmul(a, b):
    """a (N, I) @ b (I, O); either side may be a constant array."""
    av = a.data if isinstance(a, Var) else np.asarray(a, dtype=np.float64)
    bv = b.data if isinstance(b, Var) else np.asarray(b, dtype=np.float64)
    t = _tape_of(a, b)

    def backward(g):
        if isinstance(a, Var):
            a._acc(g @ bv.T)
        if isinstance(b, Var):
            b._acc(av.T @ g)

    return Var(av @ bv, t, (a, b), backward)


def relu(a):
    mask = a.data > 0.0

    def backward(g):
        a._acc(g * mask)

    return Var(a.data * mask, a.tape, (a,), backward)


def square(a):
    def backward(g):
        a._acc(g * (2.0 * a.data))

    return Var(a.data * a.data, a.tape, (a,), backward)


def total(a):
    """Sum over all elements to a scalar."""

    def backward(g):
        a._acc(np.broadcast_to(g, a.data.shape).copy())

    return Var(a.data.sum(), a.tape, (a,), backward)


def rows(a, sl):
    """Row slice a[sl]; backward scatters into the sliced range."""

    def backward(g):
        buf = np.zeros_like(a.data)
        buf[sl] = g
        a._acc(buf)

    return Var(a.data[sl], a.tape, (a,), backward)


def concat(parts, axis=1):
    t = _tape_of(*[p for p in parts if isinstance(p, Var)])
    vals = [p.data if isinstance(p, Var) else np.asarray(p, dtype=np.float64) for p in parts]
    sizes = [v.shape[axis] for v in vals]
    offs = np.cumsum([0] + sizes)

    def backward(g):
        for p, lo, hi in zip(parts, offs[:-1], offs[1:]):
            if isinstance(p, Var):
                idx = [slice(None)] * g.ndim
                idx[axis] = slice(lo, hi)
                p._acc(g[tuple(idx)])

    return Var(np.concatenate(vals, axis=axis), t, tuple(parts), backward)


def gather_weighted(feats, idx, w):
    """Trilinear-style gather: out[b] = sum_j w[b,j] * feats[idx[b,j]].

    feats: Var (V, F); idx: (B, J) int; w: (B, J). Backward scatter-adds
    into exactly the referenced vertices.
    """

    def backward(g):
        if feats.grad is None:
            feats.grad = np.zeros_like(feats.data)
        for j in range(idx.shape[1]):
            np.add.at(feats.grad, idx[:, j], g * w[:, j, None])

    out = np.einsum("bjf,bj->bf", feats.data[idx], w)
    return Var(out, feats.tape, (feats,), backward)
