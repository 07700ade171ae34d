"""Scene geometry: packed primitives, ray casting, and sampling warps.

Shapes are quads (kept as two triangles for intersection but sampled
bilinearly), raw triangles, and spheres. A flat primitive list with
linear traversal is enough at this scale; the per-ray loop lives in the
kernels backend.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .vecmath import cross, dot, to_world

TWO_PI = 2.0 * np.pi
FOUR_PI = 4.0 * np.pi

# Logical shape kinds.
QUAD, TRI, SPHERE = 0, 1, 2


@dataclass
class Geometry:
    """Packed primitive arrays plus per-logical-shape sampling data."""

    # Triangles (quads contribute two each).
    tp0: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    te1: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    te2: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    tnormal: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    tri_shape: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int32))
    tri_mat: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int32))
    # Spheres.
    sc: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    sr: np.ndarray = field(default_factory=lambda: np.zeros(0))
    sph_shape: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int32))
    sph_mat: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int32))
    # Logical shapes, indexed by shape_id.
    shape_kind: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int32))
    shape_mat: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int32))
    shape_area: np.ndarray = field(default_factory=lambda: np.zeros(0))
    # Quad/tri sampling frames: origin + two edges (spheres: center in o, radius in e1[0]).
    shape_o: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    shape_eu: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    shape_ev: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    shape_normal: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))

    @property
    def n_shapes(self):
        return self.shape_kind.shape[0]

    @property
    def total_area(self):
        return float(self.shape_area.sum())

    def bounds(self):
        """Axis-aligned bounding box as (lo, hi)."""
        los, his = [], []
        if self.tp0.size:
            pts = np.concatenate(
                [self.tp0, self.tp0 + self.te1, self.tp0 + self.te2], axis=0
            )
            los.append(pts.min(axis=0))
            his.append(pts.max(axis=0))
        if self.sc.size:
            los.append((self.sc - self.sr[:, None]).min(axis=0))
            his.append((self.sc + self.sr[:, None]).max(axis=0))
        if not los:
            return np.zeros(3), np.zeros(3)
        return np.min(los, axis=0), np.max(his, axis=0)


class GeometryBuilder:
    def __init__(self):
        self._tris = []
        self._spheres = []
        self._shapes = []

    def add_quad(self, origin, edge_u, edge_v, mat_id):
        origin = np.asarray(origin, dtype=np.float64)
        eu = np.asarray(edge_u, dtype=np.float64)
        ev = np.asarray(edge_v, dtype=np.float64)
        sid = len(self._shapes)
        n = cross(eu, ev)
        area = float(np.sqrt(dot(n, n)))
        nrm = n / area
        self._tris.append((origin, eu, ev, nrm, sid, mat_id))
        self._tris.append((origin + eu + ev, -eu, -ev, nrm, sid, mat_id))
        self._shapes.append((QUAD, mat_id, area, origin, eu, ev, nrm))
        return sid

    def add_triangle(self, p0, p1, p2, mat_id):
        p0 = np.asarray(p0, dtype=np.float64)
        e1 = np.asarray(p1, dtype=np.float64) - p0
        e2 = np.asarray(p2, dtype=np.float64) - p0
        sid = len(self._shapes)
        n = cross(e1, e2)
        dbl = float(np.sqrt(dot(n, n)))
        nrm = n / dbl
        self._tris.append((p0, e1, e2, nrm, sid, mat_id))
        self._shapes.append((TRI, mat_id, 0.5 * dbl, p0, e1, e2, nrm))
        return sid

    def add_sphere(self, center, radius, mat_id):
        center = np.asarray(center, dtype=np.float64)
        sid = len(self._shapes)
        self._spheres.append((center, float(radius), sid, mat_id))
        self._shapes.append(
            (SPHERE, mat_id, FOUR_PI * radius * radius, center,
             np.array([radius, 0.0, 0.0]), np.zeros(3), np.zeros(3))
        )
        return sid

    def build(self):
        g = Geometry()
        if self._tris:
            g.tp0 = np.ascontiguousarray([t[0] for t in self._tris])
            g.te1 = np.ascontiguousarray([t[1] for t in self._tris])
            g.te2 = np.ascontiguousarray([t[2] for t in self._tris])
            g.tnormal = np.ascontiguousarray([t[3] for t in self._tris])
            g.tri_shape = np.array([t[4] for t in self._tris], dtype=np.int32)
            g.tri_mat = np.array([t[5] for t in self._tris], dtype=np.int32)
        if self._spheres:
            g.sc = np.ascontiguousarray([s[0] for s in self._spheres])
            g.sr = np.array([s[1] for s in self._spheres])
            g.sph_shape = np.array([s[2] for s in self._spheres], dtype=np.int32)
            g.sph_mat = np.array([s[3] for s in self._spheres], dtype=np.int32)
        g.shape_kind = np.array([s[0] for s in self._shapes], dtype=np.int32)
        g.shape_mat = np.array([s[1] for s in self._shapes], dtype=np.int32)
        g.shape_area = np.array([s[2] for s in self._shapes])
        g.shape_o = np.array([s[3] for s in self._shapes]).reshape(-1, 3)
        g.shape_eu = np.array([s[4] for s in self._shapes]).reshape(-1, 3)
        g.shape_ev = np.array([s[5] for s in self._shapes]).reshape(-1, 3)
        g.shape_normal = np.array([s[6] for s in self._shapes]).reshape(-1, 3)
        return g


def subset_by_shapes(geom, shape_ids):
    """Geometry keeping only primitives of the given logical shapes.

    Shape-level tables are shared, so hit shape_ids keep their original
    meaning (usable as indices into the full scene's tables).
    """
    g = Geometry()
    tm = np.isin(geom.tri_shape, shape_ids)
    g.tp0 = np.ascontiguousarray(geom.tp0[tm])
    g.te1 = np.ascontiguousarray(geom.te1[tm])
    g.te2 = np.ascontiguousarray(geom.te2[tm])
    g.tnormal = geom.tnormal[tm]
    g.tri_shape = geom.tri_shape[tm]
    g.tri_mat = geom.tri_mat[tm]
    sm = np.isin(geom.sph_shape, shape_ids)
    g.sc = np.ascontiguousarray(geom.sc[sm])
    g.sr = np.ascontiguousarray(geom.sr[sm])
    g.sph_shape = geom.sph_shape[sm]
    g.sph_mat = geom.sph_mat[sm]
    g.shape_kind = geom.shape_kind
    g.shape_mat = geom.shape_mat
    g.shape_area = geom.shape_area
    g.shape_o = geom.shape_o
    g.shape_eu = geom.shape_eu
    g.shape_ev = geom.shape_ev
    g.shape_normal = geom.shape_normal
    return g


@dataclass
class HitBatch:
    valid: np.ndarray  # (N,) bool
    t: np.ndarray  # (N,)
    point: np.ndarray  # (N, 3)
    normal: np.ndarray  # (N, 3) unit geometric normal
    uv: np.ndarray  # (N, 2)
    shape_id: np.ndarray  # (N,) int32, -1 on miss
    mat_id: np.ndarray  # (N,) int32, -1 on miss


def intersect(geom, o, d, tmin, tmax=None):
    """Nearest-hit batch query; misses have valid=False and ids of -1."""
    o = np.ascontiguousarray(o, dtype=np.float64).reshape(-1, 3)
    d = np.ascontiguousarray(d, dtype=np.float64).reshape(-1, 3)
    n = o.shape[0]
    tmin = np.ascontiguousarray(np.broadcast_to(np.float64(tmin), (n,)))
    if tmax is None:
        tmax = np.inf
    tmax = np.ascontiguousarray(np.broadcast_to(np.float64(tmax), (n,)))

    t, kind, idx, bu, bv = kernels.intersect_rays(
        geom.tp0, geom.te1, geom.te2, geom.sc, geom.sr, o, d, tmin, tmax
    )
    valid = kind >= 0
    point = o + t[:, None] * d
    normal = np.zeros((n, 3))
    uv = np.zeros((n, 2))
    shape_id = np.full(n, -1, dtype=np.int32)
    mat_id = np.full(n, -1, dtype=np.int32)

    is_tri = kind == 0
    if np.any(is_tri):
        ti = idx[is_tri]
        normal[is_tri] = geom.tnormal[ti]
        uv[is_tri, 0] = bu[is_tri]
        uv[is_tri, 1] = bv[is_tri]
        shape_id[is_tri] = geom.tri_shape[ti]
        mat_id[is_tri] = geom.tri_mat[ti]
    is_sph = kind == 1
    if np.any(is_sph):
        si = idx[is_sph]
        nrm = (point[is_sph] - geom.sc[si]) / geom.sr[si][:, None]
        normal[is_sph] = nrm
        uv[is_sph, 0] = (np.arctan2(nrm[:, 1], nrm[:, 0]) / TWO_PI) % 1.0
        uv[is_sph, 1] = np.arccos(np.clip(nrm[:, 2], -1.0, 1.0)) / np.pi
        shape_id[is_sph] = geom.sph_shape[si]
        mat_id[is_sph] = geom.sph_mat[si]

    return HitBatch(valid, t, point, normal, uv, shape_id, mat_id)


def occluded(geom, o, d, tmin, tmax):
    """Any-hit query over the open interval (tmin, tmax)."""
    o = np.ascontiguousarray(o, dtype=np.float64).reshape(-1, 3)
    d = np.ascontiguousarray(d, dtype=np.float64).reshape(-1, 3)
    n = o.shape[0]
    tmin = np.ascontiguousarray(np.broadcast_to(np.float64(tmin), (n,)))
    tmax = np.ascontiguousarray(np.broadcast_to(np.float64(tmax), (n,)))
    return kernels.occluded_rays(
        geom.tp0, geom.te1, geom.te2, geom.sc, geom.sr, o, d, tmin, tmax
    )


@dataclass
class SurfaceSampleBatch:
    point: np.ndarray
    normal: np.ndarray
    pdf_area: np.ndarray
    shape_id: np.ndarray
    mat_id: np.ndarray


def sample_surface_uniform(geom, u):
    """Area-uniform samples over the union of all shape surfaces.

    u is (N, 2) in [0,1); the first coordinate picks the shape by area and
    is rescaled for reuse inside it, so pdf_area = 1/total_area exactly.
    """
    u = np.atleast_2d(np.asarray(u, dtype=np.float64))
    n = u.shape[0]
    areas = geom.shape_area
    cum = np.cumsum(areas)
    total = cum[-1]
    pick = np.minimum(
        np.searchsorted(cum, u[:, 0] * total, side="right"), len(areas) - 1
    )
    lo = cum[pick] - areas[pick]
    u0 = np.clip((u[:, 0] * total - lo) / areas[pick], 0.0, 1.0 - 1e-16)
    u1 = u[:, 1]

    point = np.zeros((n, 3))
    normal = np.zeros((n, 3))
    kind = geom.shape_kind[pick]

    planar = kind != SPHERE
    if np.any(planar):
        s = pick[planar]
        a = u0[planar]
        b = u1[planar]
        is_tri = kind[planar] == TRI
        # Quads map bilinearly; triangles reflect the unit square onto the triangle.
        a2, b2 = a.copy(), b.copy()
        fold = is_tri & (a + b > 1.0)
        a2[fold] = 1.0 - a[fold]
        b2[fold] = 1.0 - b[fold]
        point[planar] = (
            geom.shape_o[s] + a2[:, None] * geom.shape_eu[s] + b2[:, None] * geom.shape_ev[s]
        )
        normal[planar] = geom.shape_normal[s]
    sph = ~planar
    if np.any(sph):
        s = pick[sph]
        z = 1.0 - 2.0 * u0[sph]
        r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
        phi = TWO_PI * u1[sph]
        nrm = np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=-1)
        radius = geom.shape_eu[s][:, 0]
        point[sph] = geom.shape_o[s] + radius[:, None] * nrm
        normal[sph] = nrm

    return SurfaceSampleBatch(
        point=point,
        normal=normal,
        pdf_area=np.full(n, 1.0 / total),
        shape_id=pick.astype(np.int32),
        mat_id=geom.shape_mat[pick],
    )


def sample_hemisphere_uniform(normal, u):
    """Uniform direction(s) about `normal`; pdf = 1/(2*pi)."""
    u = np.atleast_2d(np.asarray(u, dtype=np.float64))
    z = u[:, 0]
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    phi = TWO_PI * u[:, 1]
    local = np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=-1)
    d = to_world(np.atleast_2d(normal), local)
    return d, np.full(u.shape[0], 1.0 / TWO_PI)


def sample_sphere_uniform(u):
    """Uniform direction(s) on the full sphere; pdf = 1/(4*pi)."""
    u = np.atleast_2d(np.asarray(u, dtype=np.float64))
    z = 1.0 - 2.0 * u[:, 0]
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    phi = TWO_PI * u[:, 1]
    d = np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=-1)
    return d, np.full(u.shape[0], 1.0 / FOUR_PI)


def sample_cosine_hemisphere(normal, u):
    """Cosine-weighted direction(s) about `normal`; pdf = cos(theta)/pi."""
    u = np.atleast_2d(np.asarray(u, dtype=np.float64))
    r = np.sqrt(u[:, 0])
    z = np.sqrt(np.maximum(0.0, 1.0 - u[:, 0]))
    phi = TWO_PI * u[:, 1]
    local = np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=-1)
    d = to_world(np.atleast_2d(normal), local)
    return d, z / np.pi


def cosine_hemisphere_pdf(normal, d):
    c = dot(np.atleast_2d(normal), np.atleast_2d(d))
    return np.where(c > 0.0, c / np.pi, 0.0)
