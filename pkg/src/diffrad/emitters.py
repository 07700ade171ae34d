"""Emitter (area-light) sampling and direction densities.

The emitter technique picks an emitter uniformly, then a uniform point on
its surface; its density as a *direction* sampler from x is
pdf_area * r^2 / cos_y evaluated at the first emitter surface point along
the ray, which is what both the balance-heuristic weights and the BSDF/
emitter mixture need. With a single emitter (our fixtures) this is exact;
emitters occluding each other along a ray would make it approximate.
"""

import numpy as np

from . import geometry, rng
from .vecmath import dot, normalize

COS_EPS = 1e-9


def sample_emitter_points(scene, path_ids, seed, draw):
    """Counter-RNG wrapper over sample_emitter_points_u."""
    u = np.stack(
        [rng.uniform(seed, path_ids, draw),
         rng.uniform(seed, path_ids, draw + 1),
         rng.uniform(seed, path_ids, draw + 2)],
        axis=-1,
    )
    return sample_emitter_points_u(scene, u)


def sample_emitter_points_u(scene, u):
    """Uniform point on a uniformly chosen emitter, from u in [0,1)^3.

    Returns (y, n_y, mat_id, pdf_area). pdf_area = 1/(n_emitters*area_e).
    """
    g = scene.geometry
    ids = scene.emitters
    n_e = len(ids)
    pick = np.minimum((u[:, 0] * n_e).astype(np.int64), n_e - 1)
    sid = ids[pick]
    u = u[:, 1:]

    b = len(sid)
    y = np.zeros((b, 3))
    ny = np.zeros((b, 3))
    kind = g.shape_kind[sid]
    planar = kind != geometry.SPHERE
    if np.any(planar):
        s = sid[planar]
        a0, a1 = u[planar, 0].copy(), u[planar, 1].copy()
        is_tri = kind[planar] == geometry.TRI
        fold = is_tri & (a0 + a1 > 1.0)
        a0[fold] = 1.0 - a0[fold]
        a1[fold] = 1.0 - a1[fold]
        y[planar] = g.shape_o[s] + a0[:, None] * g.shape_eu[s] + a1[:, None] * g.shape_ev[s]
        ny[planar] = g.shape_normal[s]
    sph = ~planar
    if np.any(sph):
        s = sid[sph]
        z = 1.0 - 2.0 * u[sph, 0]
        r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
        phi = 2.0 * np.pi * u[sph, 1]
        nrm = np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=-1)
        radius = g.shape_eu[s][:, 0]
        y[sph] = g.shape_o[s] + radius[:, None] * nrm
        ny[sph] = nrm

    pdf_area = 1.0 / (n_e * g.shape_area[sid])
    return y, ny, g.shape_mat[sid], pdf_area


def direction_pdf_from_hit(scene, hit_t, hit_normal, hit_shape, d):
    """Density of the emitter technique for directions whose first scene hit
    is described by (t, normal, shape); zero when that hit is not an
    emitter front face."""
    n_e = len(scene.emitters)
    if n_e == 0:
        return np.zeros(len(hit_t))
    is_emitter = np.isin(hit_shape, scene.emitters)
    cos_y = dot(hit_normal, -d)
    area = np.where(hit_shape >= 0, scene.geometry.shape_area[np.maximum(hit_shape, 0)], 1.0)
    ok = is_emitter & (cos_y > COS_EPS)
    pdf = np.where(ok, hit_t * hit_t / (n_e * area * np.where(ok, cos_y, 1.0)), 0.0)
    return pdf


def direction_pdf(scene, x, d):
    """Emitter-technique direction density for arbitrary directions from x,
    via a ray cast against the full scene."""
    hit = geometry.intersect(scene.geometry, x, d, scene.ray_eps)
    return direction_pdf_from_hit(scene, hit.t, hit.normal, hit.shape_id, d)


def balance(p_a, p_b):
    """Balance-heuristic weight of technique a against b."""
    s = p_a + p_b
    return np.where(s > 0.0, p_a / np.where(s > 0.0, s, 1.0), 0.0)
