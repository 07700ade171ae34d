"""Closed-form radiance for the `analytic` fixture.

One Lambertian receiver under one constant-radiance quad lamp whose own
albedo is zero: outgoing radiance on the receiver is exactly
albedo/pi * E_irr(x), where E_irr is the point-to-polygon irradiance
given by the classic contour formula. Because the lamp absorbs
everything it receives, this is the full transport solution at every
bounce count, and d L / d albedo_c = L_c / albedo_c channelwise.
"""

import numpy as np

from .vecmath import cross, dot, normalize

INV_PI = 1.0 / np.pi


def polygon_irradiance(x, n, verts):
    """Irradiance factor at points x (B,3) with normals n from a unit-radiance
    polygon (V,3). Exact when the polygon is entirely above each point's
    horizon (winding-insensitive via the absolute value)."""
    x = np.atleast_2d(x)
    n = np.broadcast_to(np.atleast_2d(n), x.shape)
    v = np.asarray(verts, dtype=np.float64)
    u = normalize(v[None, :, :] - x[:, None, :])  # (B, V, 3)
    u_next = np.roll(u, -1, axis=1)
    cos_t = np.clip(dot(u, u_next), -1.0, 1.0)
    theta = np.arccos(cos_t)
    g = normalize(cross(u, u_next))
    s = np.sum(theta * dot(g, n[:, None, :]), axis=1)
    return 0.5 * np.abs(s)


class AnalyticRadiance:
    """Closed-form outgoing radiance and albedo derivative for `analytic`."""

    def __init__(self, scene):
        g = scene.geometry
        mats = scene.materials
        emitting = np.any(mats.emission[g.shape_mat] != 0.0, axis=1)
        (self.lamp_id,) = np.nonzero(emitting)[0]
        (self.recv_id,) = np.nonzero(~emitting)[0]
        self.recv_mat = int(g.shape_mat[self.recv_id])
        self.albedo = mats.albedo[self.recv_mat]
        self.le = mats.emission[g.shape_mat[self.lamp_id]]
        o = g.shape_o[self.lamp_id]
        eu = g.shape_eu[self.lamp_id]
        ev = g.shape_ev[self.lamp_id]
        self.lamp_verts = np.array([o, o + eu, o + eu + ev, o + ev])
        self.lamp_normal = g.shape_normal[self.lamp_id]
        self.recv_normal = g.shape_normal[self.recv_id]
        self.n_params = scene.n_params

    def irradiance(self, x):
        return polygon_irradiance(x, self.recv_normal, self.lamp_verts)

    def outgoing(self, x, wo, shape_id, normal):
        """L(x, wo) for surface points of the fixture, (B, 3)."""
        x = np.atleast_2d(x)
        out = np.zeros((x.shape[0], 3))
        on_recv = (shape_id == self.recv_id) & (dot(normal, wo) > 0.0)
        if np.any(on_recv):
            e = self.irradiance(x[on_recv])
            out[on_recv] = self.albedo * INV_PI * e[:, None] * self.le
        on_lamp = (shape_id == self.lamp_id) & (dot(normal, wo) > 0.0)
        out[on_lamp] = self.le
        return out

    def d_albedo(self, x, wo, shape_id, normal):
        """Rows (n_params, B, 3) of dL/dp; p = receiver albedo RGB."""
        x = np.atleast_2d(x)
        jac = np.zeros((self.n_params, x.shape[0], 3))
        on_recv = (shape_id == self.recv_id) & (dot(normal, wo) > 0.0)
        if np.any(on_recv):
            e = self.irradiance(x[on_recv])
            for c in range(3):
                jac[c, on_recv, c] = INV_PI * e * self.le[c]
        return jac
