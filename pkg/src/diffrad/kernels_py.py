"""Pure-numpy ray/primitive kernels, the fallback for the compiled core.

Formulas and traversal order are kept expression-for-expression identical
to `_core.pyx` (the extension is built with -ffp-contract=off) so that the
two backends produce bit-identical hits and the rest of the engine cannot
tell them apart.
"""

import numpy as np

DET_EPS = 1e-12


def intersect_rays(tp0, te1, te2, sc, sr, o, d, tmin, tmax):
    """Nearest hit of each ray against all triangles then all spheres.

    Returns (t, kind, idx, bu, bv); kind is -1 for a miss, 0 for a
    triangle hit, 1 for a sphere hit. Ties keep the earliest primitive.
    Hits count when t is in (tmin, tmax].
    """
    n = o.shape[0]
    best_t = np.full(n, np.inf)
    kind = np.full(n, -1, dtype=np.int32)
    idx = np.full(n, -1, dtype=np.int32)
    bu = np.zeros(n)
    bv = np.zeros(n)

    ox, oy, oz = o[:, 0], o[:, 1], o[:, 2]
    dx, dy, dz = d[:, 0], d[:, 1], d[:, 2]

    for i in range(tp0.shape[0]):
        e1x, e1y, e1z = te1[i, 0], te1[i, 1], te1[i, 2]
        e2x, e2y, e2z = te2[i, 0], te2[i, 1], te2[i, 2]
        px = dy * e2z - dz * e2y
        py = dz * e2x - dx * e2z
        pz = dx * e2y - dy * e2x
        det = e1x * px + e1y * py + e1z * pz
        ok = np.abs(det) >= DET_EPS
        inv = 1.0 / np.where(ok, det, 1.0)
        tvx = ox - tp0[i, 0]
        tvy = oy - tp0[i, 1]
        tvz = oz - tp0[i, 2]
        u = (tvx * px + tvy * py + tvz * pz) * inv
        ok &= (u >= 0.0) & (u <= 1.0)
        qx = tvy * e1z - tvz * e1y
        qy = tvz * e1x - tvx * e1z
        qz = tvx * e1y - tvy * e1x
        v = (dx * qx + dy * qy + dz * qz) * inv
        ok &= (v >= 0.0) & (u + v <= 1.0)
        t = (e2x * qx + e2y * qy + e2z * qz) * inv
        ok &= (t > tmin) & (t <= tmax) & (t < best_t)
        best_t = np.where(ok, t, best_t)
        kind = np.where(ok, np.int32(0), kind)
        idx = np.where(ok, np.int32(i), idx)
        bu = np.where(ok, u, bu)
        bv = np.where(ok, v, bv)

    for i in range(sc.shape[0]):
        ocx = ox - sc[i, 0]
        ocy = oy - sc[i, 1]
        ocz = oz - sc[i, 2]
        b = ocx * dx + ocy * dy + ocz * dz
        c2 = ocx * ocx + ocy * ocy + ocz * ocz - sr[i] * sr[i]
        disc = b * b - c2
        ok = disc >= 0.0
        s = np.sqrt(np.where(ok, disc, 0.0))
        t0 = -b - s
        t1 = -b + s
        t = np.where(t0 > tmin, t0, t1)
        ok &= (t > tmin) & (t <= tmax) & (t < best_t)
        best_t = np.where(ok, t, best_t)
        kind = np.where(ok, np.int32(1), kind)
        idx = np.where(ok, np.int32(i), idx)

    best_t = np.where(kind >= 0, best_t, 0.0)
    return best_t, kind, idx, bu, bv


def occluded_rays(tp0, te1, te2, sc, sr, o, d, tmin, tmax):
    """Whether any primitive lies in (tmin, tmax) along each ray."""
    n = o.shape[0]
    hit = np.zeros(n, dtype=bool)
    ox, oy, oz = o[:, 0], o[:, 1], o[:, 2]
    dx, dy, dz = d[:, 0], d[:, 1], d[:, 2]

    for i in range(tp0.shape[0]):
        e1x, e1y, e1z = te1[i, 0], te1[i, 1], te1[i, 2]
        e2x, e2y, e2z = te2[i, 0], te2[i, 1], te2[i, 2]
        px = dy * e2z - dz * e2y
        py = dz * e2x - dx * e2z
        pz = dx * e2y - dy * e2x
        det = e1x * px + e1y * py + e1z * pz
        ok = np.abs(det) >= DET_EPS
        inv = 1.0 / np.where(ok, det, 1.0)
        tvx = ox - tp0[i, 0]
        tvy = oy - tp0[i, 1]
        tvz = oz - tp0[i, 2]
        u = (tvx * px + tvy * py + tvz * pz) * inv
        ok &= (u >= 0.0) & (u <= 1.0)
        qx = tvy * e1z - tvz * e1y
        qy = tvz * e1x - tvx * e1z
        qz = tvx * e1y - tvy * e1x
        v = (dx * qx + dy * qy + dz * qz) * inv
        ok &= (v >= 0.0) & (u + v <= 1.0)
        t = (e2x * qx + e2y * qy + e2z * qz) * inv
        hit |= ok & (t > tmin) & (t < tmax)

    for i in range(sc.shape[0]):
        ocx = ox - sc[i, 0]
        ocy = oy - sc[i, 1]
        ocz = oz - sc[i, 2]
        b = ocx * dx + ocy * dy + ocz * dz
        c2 = ocx * ocx + ocy * ocy + ocz * ocz - sr[i] * sr[i]
        disc = b * b - c2
        ok = disc >= 0.0
        s = np.sqrt(np.where(ok, disc, 0.0))
        t0 = -b - s
        t1 = -b + s
        t = np.where(t0 > tmin, t0, t1)
        hit |= ok & (t > tmin) & (t < tmax)

    return hit
