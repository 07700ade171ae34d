"""BRDF and emission models: evaluation, sampling, and parameter derivatives.

Two models: Lambertian diffuse and GGX rough conductor (Smith
masking-shadowing, exact conductor Fresnel). Evaluations exclude the
incident cosine — that factor belongs to the projected-solid-angle
measure and is applied by the integrators.

Parameter derivatives run the same evaluation arithmetic on dual numbers
(`eval_dual`, `emission_dual`), seeded from the scene's differentiable
parameter entries. Sampling is detached everywhere: sampled directions
and the pdfs used in estimator denominators are plain values.
"""

import numpy as np

from .dual import Dual, dmax, dsqrt, dwhere
from .geometry import sample_cosine_hemisphere
from .scene import DIFFUSE
from .vecmath import dot, normalize, reflect, to_world

INV_PI = 1.0 / np.pi
MIN_PDF = 1e-9  # below this, sample() flags a discard


def _ggx_d(cos_h, alpha):
    a2 = alpha * alpha
    c2 = cos_h * cos_h
    k = c2 * (a2 - 1.0) + 1.0
    return a2 / (np.pi * k * k)


def _smith_g1(cos_v, alpha):
    a2 = alpha * alpha
    denom = cos_v + dsqrt(a2 + (1.0 - a2) * cos_v * cos_v)
    return 2.0 * cos_v / denom


def _fresnel_conductor(cos_i, eta, k):
    """Exact unpolarized conductor Fresnel, per RGB channel.

    cos_i: (B, 1) incident cosine; eta, k: (B, 3). Returns (B, 3).
    """
    c2 = cos_i * cos_i
    sin2 = 1.0 - c2
    e2 = eta * eta
    k2 = k * k
    t0 = e2 - k2 - sin2
    a2b2 = dsqrt(dmax(t0 * t0 + 4.0 * e2 * k2, 0.0))
    a = dsqrt(dmax((a2b2 + t0) * 0.5, 0.0))
    term = 2.0 * a * cos_i
    rs = (a2b2 + c2 - term) / (a2b2 + c2 + term)
    term2 = 2.0 * a * cos_i * sin2
    rp = rs * (c2 * a2b2 + sin2 * sin2 - term2) / (c2 * a2b2 + sin2 * sin2 + term2)
    return 0.5 * (rs + rp)


def _eval_core(model, albedo, alpha, eta, k, n, wi, wo):
    """Shared evaluation; material fields may be Duals."""
    cos_i = dot(n, wi)
    cos_o = dot(n, wo)
    up = (cos_i > 0.0) & (cos_o > 0.0)

    f_diff = albedo * INV_PI

    h = normalize(wi + wo)
    cos_h = np.clip(dot(n, h), 0.0, 1.0)
    cd = np.clip(dot(wo, h), 1e-12, 1.0)
    d = _ggx_d(cos_h, alpha)
    g = _smith_g1(np.abs(cos_i), alpha) * _smith_g1(np.abs(cos_o), alpha)
    fr = _fresnel_conductor(cd[:, None], eta, k)
    denom = np.where(up, 4.0 * cos_i * cos_o, 1.0)
    f_cond = fr * ((d * g / denom)[:, None])

    sel = (model == DIFFUSE)[:, None]
    f = dwhere(sel, f_diff, f_cond)
    return f * up[:, None]


def eval(mats, mat_id, n, wi, wo):
    """BRDF value f(x, wi, wo), (B, 3); zero outside the upper hemisphere."""
    return _eval_core(
        mats.model[mat_id],
        mats.albedo[mat_id],
        mats.roughness[mat_id],
        mats.eta[mat_id],
        mats.k[mat_id],
        n,
        wi,
        wo,
    )


def pdf(mats, mat_id, n, wi, wo):
    """Solid-angle density of sample() for the given pair, (B,)."""
    cos_i = dot(n, wi)
    cos_o = dot(n, wo)
    up = (cos_i > 0.0) & (cos_o > 0.0)

    p_diff = cos_i * INV_PI

    h = normalize(wi + wo)
    cos_h = np.clip(dot(n, h), 0.0, 1.0)
    cd = np.maximum(np.abs(dot(wo, h)), 1e-12)
    alpha = mats.roughness[mat_id]
    p_cond = _ggx_d(cos_h, alpha) * cos_h / (4.0 * cd)

    p = np.where(mats.model[mat_id] == DIFFUSE, p_diff, p_cond)
    return np.where(up, p, 0.0)


def sample(mats, mat_id, n, wo, u):
    """Importance-sample wi; returns (wi, pdf, weight, ok).

    weight is the throughput factor f * cos_i / pdf. ok=False marks
    degenerate samples (pdf < MIN_PDF or below-horizon wi) the caller
    should discard.
    """
    model = mats.model[mat_id]
    alpha = mats.roughness[mat_id]
    b = len(mat_id)

    wi_d, pdf_d = sample_cosine_hemisphere(n, u)

    # GGX normal-distribution sampling: theta_h = atan(alpha*sqrt(u1/(1-u1))).
    u1 = np.clip(u[:, 0], 0.0, 1.0 - 1e-12)
    c2 = 1.0 / (1.0 + alpha * alpha * u1 / (1.0 - u1))
    cos_h = np.sqrt(c2)
    sin_h = np.sqrt(np.maximum(0.0, 1.0 - c2))
    phi = 2.0 * np.pi * u[:, 1]
    h = to_world(n, np.stack([sin_h * np.cos(phi), sin_h * np.sin(phi), cos_h], axis=-1))
    wi_c = reflect(wo, h)
    cd = np.maximum(np.abs(dot(wo, h)), 1e-12)
    pdf_c = _ggx_d(cos_h, alpha) * cos_h / (4.0 * cd)

    is_diff = model == DIFFUSE
    wi = np.where(is_diff[:, None], wi_d, wi_c)
    p = np.where(is_diff, pdf_d, pdf_c)

    cos_i = dot(n, wi)
    ok = (p >= MIN_PDF) & (cos_i > 0.0) & (dot(n, wo) > 0.0)
    p_safe = np.where(ok, p, 1.0)
    f = eval(mats, mat_id, n, wi, wo)
    weight = f * (cos_i / p_safe)[:, None] * ok[:, None]
    return wi, np.where(ok, p, 0.0), weight, ok


def _seed_field(entries, fld, mat_id, base, n_params):
    """Dual-wrap a gathered material field if any tracked entry touches it."""
    touched = [e for e in entries if e.fld == fld]
    if not touched:
        return base, False
    jac = np.zeros((n_params,) + base.shape)
    for e in touched:
        rows = mat_id == e.mat
        if base.ndim == 2:
            jac[e.index, rows, e.channel] = 1.0
        else:
            jac[e.index, rows] = 1.0
    return Dual(base, jac), True


def eval_dual(mats, mat_id, n, wi, wo, entries, n_params):
    """(f, df) where df is (n_params, B, 3): the BRDF parameter jacobian."""
    albedo, a_on = _seed_field(entries, "albedo", mat_id, mats.albedo[mat_id], n_params)
    alpha, r_on = _seed_field(entries, "roughness", mat_id, mats.roughness[mat_id], n_params)
    k, k_on = _seed_field(entries, "k", mat_id, mats.k[mat_id], n_params)
    if not (a_on or r_on or k_on):
        f = _eval_core(mats.model[mat_id], mats.albedo[mat_id], mats.roughness[mat_id],
                       mats.eta[mat_id], mats.k[mat_id], n, wi, wo)
        return f, np.zeros((n_params,) + f.shape)
    out = _eval_core(mats.model[mat_id], albedo, alpha, mats.eta[mat_id], k, n, wi, wo)
    if isinstance(out, Dual):
        return out.val, out.jac
    return out, np.zeros((n_params,) + out.shape)


def emission(mats, mat_id, n, wo):
    """Emitted radiance toward wo; front side only, (B, 3)."""
    le = mats.emission[mat_id]
    front = dot(n, wo) > 0.0
    return le * front[:, None]


def emission_dual(mats, mat_id, n, wo, entries, n_params):
    """(Le, dLe) with identity rows for active emission channels."""
    le = emission(mats, mat_id, n, wo)
    jac = np.zeros((n_params,) + le.shape)
    front = dot(n, wo) > 0.0
    for e in entries:
        if e.fld == "emission":
            rows = (mat_id == e.mat) & front
            jac[e.index, rows, e.channel] = 1.0
    return le, jac
