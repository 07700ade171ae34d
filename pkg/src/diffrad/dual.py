"""Forward-mode dual arrays for material-parameter derivatives.

A Dual carries a value array of shape S and a jacobian of shape (P,) + S,
one row per tracked scene-parameter scalar. Arithmetic propagates the
jacobian, so any evaluation written with the helpers below yields exact
parameter derivatives of itself.
"""

import numpy as np


class Dual:
    __slots__ = ("val", "jac")
    __array_ufunc__ = None  # keep numpy from consuming us in mixed ops

    def __init__(self, val, jac):
        self.val = np.asarray(val, dtype=np.float64)
        self.jac = np.asarray(jac, dtype=np.float64)

    @classmethod
    def constant(cls, val, n_params):
        val = np.asarray(val, dtype=np.float64)
        return cls(val, np.zeros((n_params,) + val.shape))

    @property
    def n_params(self):
        return self.jac.shape[0]

    def __add__(self, o):
        if isinstance(o, Dual):
            return Dual(self.val + o.val, self.jac + o.jac)
        return Dual(self.val + o, self.jac + np.zeros_like(np.asarray(o, dtype=np.float64)))

    __radd__ = __add__

    def __neg__(self):
        return Dual(-self.val, -self.jac)

    def __sub__(self, o):
        return self + (-o if isinstance(o, Dual) else -np.asarray(o, dtype=np.float64))

    def __rsub__(self, o):
        return (-self) + o

    def __mul__(self, o):
        if isinstance(o, Dual):
            return Dual(self.val * o.val, self.jac * o.val + self.val * o.jac)
        o = np.asarray(o, dtype=np.float64)
        return Dual(self.val * o, self.jac * o)

    __rmul__ = __mul__

    def __truediv__(self, o):
        if isinstance(o, Dual):
            inv = 1.0 / o.val
            return Dual(self.val * inv, (self.jac - self.val * inv * o.jac) * inv)
        o = np.asarray(o, dtype=np.float64)
        return Dual(self.val / o, self.jac / o)

    def __rtruediv__(self, o):
        inv = 1.0 / self.val
        return Dual(o * inv, -np.asarray(o, dtype=np.float64) * inv * inv * self.jac)

    def __getitem__(self, key):
        return Dual(self.val[key], self.jac[(slice(None),) + (key if isinstance(key, tuple) else (key,))])


def value(x):
    return x.val if isinstance(x, Dual) else x


def dsqrt(x):
    if isinstance(x, Dual):
        s = np.sqrt(x.val)
        return Dual(s, x.jac * (0.5 / np.maximum(s, 1e-300)))
    return np.sqrt(x)


def dwhere(cond, a, b):
    """Select per element; derivative follows the selected branch."""
    if not (isinstance(a, Dual) or isinstance(b, Dual)):
        return np.where(cond, a, b)
    n = a.n_params if isinstance(a, Dual) else b.n_params
    shape = np.broadcast_shapes(
        np.shape(cond),
        a.val.shape if isinstance(a, Dual) else np.shape(a),
        b.val.shape if isinstance(b, Dual) else np.shape(b),
    )
    a = a if isinstance(a, Dual) else Dual.constant(np.broadcast_to(a, shape), n)
    b = b if isinstance(b, Dual) else Dual.constant(np.broadcast_to(b, shape), n)
    return Dual(np.where(cond, a.val, b.val), np.where(cond[None], a.jac, b.jac))


def dmax(x, floor):
    """max(x, floor) with the clamped region treated as constant."""
    if isinstance(x, Dual):
        keep = x.val > floor
        return Dual(np.maximum(x.val, floor), x.jac * keep)
    return np.maximum(x, floor)


def dstack(parts, axis=-1):
    if any(isinstance(p, Dual) for p in parts):
        n = next(p.n_params for p in parts if isinstance(p, Dual))
        parts = [p if isinstance(p, Dual) else Dual.constant(p, n) for p in parts]
        val = np.stack([p.val for p in parts], axis=axis)
        ax = axis if axis >= 0 else val.ndim + axis
        return Dual(val, np.stack([p.jac for p in parts], axis=ax + 1))
    return np.stack(parts, axis=axis)
