"""Small-vector helpers on numpy arrays.

Points and directions are float64 arrays of shape (3,) or batches (N, 3).
Direction-typed values are kept unit length; `normalize` is the single
place that enforces it.
"""

import numpy as np

UNIT_TOL = 1e-9


def vec3(x, y, z):
    return np.array([x, y, z], dtype=np.float64)


def dot(a, b):
    """Componentwise dot, broadcasting over leading axes. Returns (...,)."""
    a = np.asarray(a)
    b = np.asarray(b)
    return a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1] + a[..., 2] * b[..., 2]


def cross(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    out = np.empty(np.broadcast(a, b).shape, dtype=np.float64)
    out[..., 0] = a[..., 1] * b[..., 2] - a[..., 2] * b[..., 1]
    out[..., 1] = a[..., 2] * b[..., 0] - a[..., 0] * b[..., 2]
    out[..., 2] = a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]
    return out


def norm(a):
    return np.sqrt(dot(a, a))


def normalize(a):
    a = np.asarray(a, dtype=np.float64)
    n = norm(a)
    return a / np.expand_dims(np.maximum(n, 1e-300), -1)


def is_unit(a, tol=UNIT_TOL):
    return np.all(np.abs(norm(a) - 1.0) <= tol)


def orthonormal_basis(n):
    """Tangent/bitangent frame(s) around unit normal(s) n, shape (..., 3).

    Branchless Duff et al. construction; deterministic for batch use.
    """
    n = np.asarray(n, dtype=np.float64)
    sign = np.where(n[..., 2] >= 0.0, 1.0, -1.0)
    a = -1.0 / (sign + n[..., 2])
    b = n[..., 0] * n[..., 1] * a
    t = np.stack(
        [1.0 + sign * n[..., 0] * n[..., 0] * a, sign * b, -sign * n[..., 0]], axis=-1
    )
    bt = np.stack([b, sign + n[..., 1] * n[..., 1] * a, -n[..., 1]], axis=-1)
    return t, bt


def to_world(n, local):
    """Map local (x, y, z)=(tangent, bitangent, normal) coords to world."""
    t, bt = orthonormal_basis(n)
    return (
        t * local[..., 0:1] + bt * local[..., 1:2] + np.asarray(n) * local[..., 2:3]
    )


def reflect(w, n):
    """Mirror w about unit n (both pointing away from the surface)."""
    return 2.0 * np.expand_dims(dot(w, n), -1) * np.asarray(n) - np.asarray(w)


def luminance(rgb):
    rgb = np.asarray(rgb)
    return 0.2126 * rgb[..., 0] + 0.7152 * rgb[..., 1] + 0.0722 * rgb[..., 2]
