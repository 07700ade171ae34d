# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled ray/primitive kernels. Twin of kernels_py (see parity note there)."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, INFINITY

cnp.import_array()

DEF DET_EPS = 1e-12


def intersect_rays(const double[:, ::1] tp0, const double[:, ::1] te1, const double[:, ::1] te2,
                   const double[:, ::1] sc, const double[::1] sr,
                   const double[:, ::1] o, const double[:, ::1] d,
                   const double[::1] tmin, const double[::1] tmax):
    cdef Py_ssize_t n = o.shape[0]
    cdef Py_ssize_t nt = tp0.shape[0]
    cdef Py_ssize_t ns = sc.shape[0]
    best_t_arr = np.zeros(n)
    kind_arr = np.full(n, -1, dtype=np.int32)
    idx_arr = np.full(n, -1, dtype=np.int32)
    bu_arr = np.zeros(n)
    bv_arr = np.zeros(n)
    cdef double[::1] best_t = best_t_arr
    cdef int[::1] kind = kind_arr
    cdef int[::1] idx = idx_arr
    cdef double[::1] bu = bu_arr
    cdef double[::1] bv = bv_arr

    cdef Py_ssize_t r, i
    cdef double ox, oy, oz, dx, dy, dz, lo, hi, bt
    cdef double e1x, e1y, e1z, e2x, e2y, e2z
    cdef double px, py, pz, det, inv, tvx, tvy, tvz, u, qx, qy, qz, v, t
    cdef double ocx, ocy, ocz, b, c2, disc, s, t0, t1
    cdef int bk, bi
    cdef double bbu, bbv

    with nogil:
        for r in range(n):
            ox = o[r, 0]; oy = o[r, 1]; oz = o[r, 2]
            dx = d[r, 0]; dy = d[r, 1]; dz = d[r, 2]
            lo = tmin[r]; hi = tmax[r]
            bt = INFINITY
            bk = -1; bi = -1; bbu = 0.0; bbv = 0.0
            for i in range(nt):
                e1x = te1[i, 0]; e1y = te1[i, 1]; e1z = te1[i, 2]
                e2x = te2[i, 0]; e2y = te2[i, 1]; e2z = te2[i, 2]
                px = dy * e2z - dz * e2y
                py = dz * e2x - dx * e2z
                pz = dx * e2y - dy * e2x
                det = e1x * px + e1y * py + e1z * pz
                if fabs(det) < DET_EPS:
                    continue
                inv = 1.0 / det
                tvx = ox - tp0[i, 0]
                tvy = oy - tp0[i, 1]
                tvz = oz - tp0[i, 2]
                u = (tvx * px + tvy * py + tvz * pz) * inv
                if u < 0.0 or u > 1.0:
                    continue
                qx = tvy * e1z - tvz * e1y
                qy = tvz * e1x - tvx * e1z
                qz = tvx * e1y - tvy * e1x
                v = (dx * qx + dy * qy + dz * qz) * inv
                if v < 0.0 or u + v > 1.0:
                    continue
                t = (e2x * qx + e2y * qy + e2z * qz) * inv
                if t > lo and t <= hi and t < bt:
                    bt = t; bk = 0; bi = <int>i; bbu = u; bbv = v
            for i in range(ns):
                ocx = ox - sc[i, 0]
                ocy = oy - sc[i, 1]
                ocz = oz - sc[i, 2]
                b = ocx * dx + ocy * dy + ocz * dz
                c2 = ocx * ocx + ocy * ocy + ocz * ocz - sr[i] * sr[i]
                disc = b * b - c2
                if disc < 0.0:
                    continue
                s = sqrt(disc)
                t0 = -b - s
                t1 = -b + s
                t = t0 if t0 > lo else t1
                if t > lo and t <= hi and t < bt:
                    bt = t; bk = 1; bi = <int>i
            if bk >= 0:
                best_t[r] = bt
                kind[r] = bk
                idx[r] = bi
                bu[r] = bbu
                bv[r] = bbv

    return best_t_arr, kind_arr, idx_arr, bu_arr, bv_arr


def occluded_rays(const double[:, ::1] tp0, const double[:, ::1] te1, const double[:, ::1] te2,
                  const double[:, ::1] sc, const double[::1] sr,
                  const double[:, ::1] o, const double[:, ::1] d,
                  const double[::1] tmin, const double[::1] tmax):
    cdef Py_ssize_t n = o.shape[0]
    cdef Py_ssize_t nt = tp0.shape[0]
    cdef Py_ssize_t ns = sc.shape[0]
    hit_arr = np.zeros(n, dtype=bool)
    cdef cnp.uint8_t[::1] hit = hit_arr.view(np.uint8)

    cdef Py_ssize_t r, i
    cdef double ox, oy, oz, dx, dy, dz, lo, hi
    cdef double e1x, e1y, e1z, e2x, e2y, e2z
    cdef double px, py, pz, det, inv, tvx, tvy, tvz, u, qx, qy, qz, v, t
    cdef double ocx, ocy, ocz, b, c2, disc, s, t0, t1

    with nogil:
        for r in range(n):
            ox = o[r, 0]; oy = o[r, 1]; oz = o[r, 2]
            dx = d[r, 0]; dy = d[r, 1]; dz = d[r, 2]
            lo = tmin[r]; hi = tmax[r]
            for i in range(nt):
                e1x = te1[i, 0]; e1y = te1[i, 1]; e1z = te1[i, 2]
                e2x = te2[i, 0]; e2y = te2[i, 1]; e2z = te2[i, 2]
                px = dy * e2z - dz * e2y
                py = dz * e2x - dx * e2z
                pz = dx * e2y - dy * e2x
                det = e1x * px + e1y * py + e1z * pz
                if fabs(det) < DET_EPS:
                    continue
                inv = 1.0 / det
                tvx = ox - tp0[i, 0]
                tvy = oy - tp0[i, 1]
                tvz = oz - tp0[i, 2]
                u = (tvx * px + tvy * py + tvz * pz) * inv
                if u < 0.0 or u > 1.0:
                    continue
                qx = tvy * e1z - tvz * e1y
                qy = tvz * e1x - tvx * e1z
                qz = tvx * e1y - tvy * e1x
                v = (dx * qx + dy * qy + dz * qz) * inv
                if v < 0.0 or u + v > 1.0:
                    continue
                t = (e2x * qx + e2y * qy + e2z * qz) * inv
                if t > lo and t < hi:
                    hit[r] = 1
                    break
            if hit[r]:
                continue
            for i in range(ns):
                ocx = ox - sc[i, 0]
                ocy = oy - sc[i, 1]
                ocz = oz - sc[i, 2]
                b = ocx * dx + ocy * dy + ocz * dz
                c2 = ocx * ocx + ocy * ocy + ocz * ocz - sr[i] * sr[i]
                disc = b * b - c2
                if disc < 0.0:
                    continue
                s = sqrt(disc)
                t0 = -b - s
                t1 = -b + s
                t = t0 if t0 > lo else t1
                if t > lo and t < hi:
                    hit[r] = 1
                    break

    return hit_arr
