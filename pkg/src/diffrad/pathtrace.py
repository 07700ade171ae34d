"""Wavefront path tracing: primal renders, field renders, and two
parameter-gradient oracles (central finite differences with common random
numbers, and a forward-mode dual-number tracer).

Every random draw is a pure function of (seed, global path id, draw
index), so results are independent of wavefront chunking, renders are
bit-reproducible, and finite differences at p+eps/p-eps share their
entire sample streams.

Estimators use solid-angle pdfs with the incident cosine written into the
integrand (the projected-solid-angle convention of the transport
equation). Next-event estimation and emitter hits are combined with the
balance heuristic; Russian roulette starts at RR_DEPTH with clamped
survival probability.
"""

import numpy as np

from . import brdf, emitters, geometry, rng
from .imageio import GradientImage, Image
from .vecmath import dot, luminance, normalize

CHUNK = 1 << 16
RR_DEPTH = 5
RR_LO, RR_HI = 0.05, 0.95
DRAWS_PER_DEPTH = 16
# Draw slots within a depth level.
K_EPICK, K_EU, K_EV, K_BU0, K_BU1, K_RR = 0, 1, 2, 3, 4, 5


def depth_draw(base, depth, k):
    return base + DRAWS_PER_DEPTH * depth + k


def _nee_contrib(scene, x, n, wo, mat_id, path_ids, seed, draw, want_dual=False):
    """One-sample next-event estimate at each vertex.

    Returns (contrib, f, fjac, lejac, mu): contrib = f*cos_x*Le*mis/pdf;
    when want_dual, fjac/lejac are (P,B,3) jacobians of f and Le and
    mu = cos_x*mis*vis/pdf is the detached scalar multiplier.
    """
    y, ny, ymat, pdf_area = emitters.sample_emitter_points(scene, path_ids, seed, draw)
    delta = y - x
    r2 = np.maximum(dot(delta, delta), 1e-18)
    r = np.sqrt(r2)
    wl = delta / r[:, None]
    cos_x = dot(n, wl)
    cos_y = dot(ny, -wl)
    ok = (cos_x > 0.0) & (cos_y > emitters.COS_EPS)
    pdf_sa = np.where(ok, pdf_area * r2 / np.where(ok, cos_y, 1.0), 0.0)

    vis = np.zeros(len(r), dtype=bool)
    if np.any(ok):
        io = np.nonzero(ok)[0]
        vis[io] = ~geometry.occluded(
            scene.geometry, x[io], wl[io], scene.ray_eps, r[io] - scene.ray_eps
        )
    ok &= vis

    le = scene.materials.emission[ymat] * (cos_y > 0.0)[:, None]
    pdf_b = brdf.pdf(scene.materials, mat_id, n, wl, wo)
    w = emitters.balance(pdf_sa, pdf_b)
    mu = np.where(ok, cos_x * w / np.where(pdf_sa > 0.0, pdf_sa, 1.0), 0.0)

    if want_dual:
        entries = scene.params.entries
        f, fjac = brdf.eval_dual(scene.materials, mat_id, n, wl, wo, entries, scene.n_params)
        _, lejac = brdf.emission_dual(scene.materials, ymat, ny, -wl, entries, scene.n_params)
        lejac = lejac * (cos_y > 0.0)[None, :, None]
        return f * le * mu[:, None], f, fjac, le, lejac, mu
    f = brdf.eval(scene.materials, mat_id, n, wl, wo)
    return f * le * mu[:, None]


def trace_radiance(scene, o, d, path_ids, seed, max_depth, draw_base=0,
                   rr_depth=RR_DEPTH, tmin0=0.0):
    """One-sample path-traced radiance along each ray, (B, 3)."""
    b = len(path_ids)
    out = np.zeros((b, 3))
    alive = np.arange(b)
    throughput = np.ones((b, 3))
    prev_pdf = np.zeros(b)  # 0 marks a delta (camera) segment: no MIS competition
    tmin = np.full(b, tmin0)
    has_emitters = len(scene.emitters) > 0
    mats = scene.materials

    for depth in range(1, max_depth + 1):
        hit = geometry.intersect(scene.geometry, o, d, tmin)
        live = hit.valid
        if not np.any(live):
            break
        alive = alive[live]
        throughput = throughput[live]
        prev_pdf = prev_pdf[live]
        pid = path_ids[alive]
        x = hit.point[live]
        n = hit.normal[live]
        mat_id = hit.mat_id[live]
        wo = -d[live]

        le = brdf.emission(mats, mat_id, n, wo)
        lit = np.any(le != 0.0, axis=1)
        if np.any(lit):
            if depth == 1:
                w = np.ones(len(pid))
            else:
                p_e = emitters.direction_pdf_from_hit(
                    scene, hit.t[live], n, hit.shape_id[live], d[live]
                )
                w = emitters.balance(prev_pdf, p_e)
            np.add.at(out, alive[lit], (throughput * le * w[:, None])[lit])

        if depth == max_depth:
            break

        if has_emitters:
            c = _nee_contrib(
                scene, x, n, wo, mat_id, pid, seed, depth_draw(draw_base, depth, K_EPICK)
            )
            np.add.at(out, alive, throughput * c)

        u = np.stack(
            [
                rng.uniform(seed, pid, depth_draw(draw_base, depth, K_BU0)),
                rng.uniform(seed, pid, depth_draw(draw_base, depth, K_BU1)),
            ],
            axis=-1,
        )
        wi, pdf_b, weight, ok = brdf.sample(mats, mat_id, n, wo, u)
        throughput = throughput * weight
        prev_pdf = pdf_b

        if depth >= rr_depth:
            q = np.clip(luminance(throughput), RR_LO, RR_HI)
            u_rr = rng.uniform(seed, pid, depth_draw(draw_base, depth, K_RR))
            ok &= u_rr < q
            throughput = throughput / q[:, None]

        keep = ok & np.any(throughput != 0.0, axis=1)
        if not np.any(keep):
            break
        alive = alive[keep]
        throughput = throughput[keep]
        prev_pdf = prev_pdf[keep]
        o = x[keep]
        d = wi[keep]
        tmin = np.full(len(alive), scene.ray_eps)

    return out


def _pixel_chunks(scene, spp):
    w, h = scene.camera.resolution
    total = w * h * spp
    for start in range(0, total, CHUNK):
        ids = np.arange(start, min(start + CHUNK, total), dtype=np.uint64)
        yield ids, (ids // np.uint64(spp)).astype(np.int64)


def render_primal(scene, spp, max_depth, seed):
    """Path-traced camera image (NEE + MIS + Russian roulette)."""
    w, h = scene.camera.resolution
    acc = np.zeros((w * h, 3))
    for pids, pixels in _pixel_chunks(scene, spp):
        u = np.stack([rng.uniform(seed, pids, 0), rng.uniform(seed, pids, 1)], axis=-1)
        o, d = scene.camera.primary_rays(pixels, u)
        radiance = trace_radiance(scene, o, d, pids, seed, max_depth, draw_base=2)
        np.add.at(acc, pixels, radiance)
    img = (acc / spp).reshape(h, w, 3)
    return Image(img, {"mode": "primal", "spp": spp, "max_depth": max_depth, "seed": seed})


def render_field_lhs(scene, field, spp, seed):
    """First-hit field query, averaged over spp jittered samples per pixel."""
    w, h = scene.camera.resolution
    p = getattr(field, "n_params", 0)
    grad = p > 0
    acc = np.zeros((w * h, p, 3)) if grad else np.zeros((w * h, 3))
    for pids, pixels in _pixel_chunks(scene, spp):
        u = np.stack([rng.uniform(seed, pids, 0), rng.uniform(seed, pids, 1)], axis=-1)
        o, d = scene.camera.primary_rays(pixels, u)
        hit = geometry.intersect(scene.geometry, o, d, 0.0)
        if not np.any(hit.valid):
            continue
        hv = hit.valid
        vals = field.eval_lhs(scene, hit.point[hv], hit.normal[hv], hit.mat_id[hv],
                              hit.shape_id[hv], -d[hv])
        np.add.at(acc, pixels[hv], vals)
    meta = {"mode": "field-lhs", "spp": spp, "seed": seed}
    if grad:
        data = np.moveaxis((acc / spp).reshape(h, w, p, 3), 2, 0)
        return GradientImage(data, scene.params.names(), meta)
    return Image((acc / spp).reshape(h, w, 3), meta)


def render_field_rhs(scene, field, spp, m_incident, seed):
    """First-hit RHS evaluation: one extra scattering step through the field.

    This is the production gradient path during inverse optimization; the
    scattering terms use the scene's current parameters.
    """
    w, h = scene.camera.resolution
    p = getattr(field, "n_params", 0)
    grad = p > 0
    acc = np.zeros((w * h, p, 3)) if grad else np.zeros((w * h, 3))
    for pids, pixels in _pixel_chunks(scene, spp):
        u = np.stack([rng.uniform(seed, pids, 0), rng.uniform(seed, pids, 1)], axis=-1)
        o, d = scene.camera.primary_rays(pixels, u)
        hit = geometry.intersect(scene.geometry, o, d, 0.0)
        if not np.any(hit.valid):
            continue
        hv = hit.valid
        vals = field.eval_rhs(scene, hit.point[hv], hit.normal[hv], hit.mat_id[hv],
                              hit.shape_id[hv], -d[hv], m_incident,
                              (seed, pids[hv], 2))
        np.add.at(acc, pixels[hv], vals)
    meta = {"mode": "field-rhs", "spp": spp, "M": m_incident, "seed": seed}
    if grad:
        data = np.moveaxis((acc / spp).reshape(h, w, p, 3), 2, 0)
        return GradientImage(data, scene.params.names(), meta)
    return Image((acc / spp).reshape(h, w, 3), meta)


def fd_gradient(scene, param_index, eps, spp, max_depth, seed):
    """Central finite difference of the render w.r.t. scalar parameter
    `param_index`, using identical sample streams on both sides."""
    from .scene import PARAM_FIELDS, SceneError

    e = scene.params.entries[param_index]
    lo, hi = PARAM_FIELDS[e.fld][1], PARAM_FIELDS[e.fld][2]
    p0 = scene.get_values()[param_index]
    if p0 - eps < lo or p0 + eps > hi:
        raise SceneError(
            f"fd_gradient: parameter {e.name}[{e.channel}]={p0} within {eps} of its "
            f"range [{lo}, {hi}]; the stencil would be clamped"
        )

    vals = scene.get_values()
    s = scene.fork()
    step = np.zeros_like(vals)
    step[param_index] = eps
    s.set_values(vals + step)
    hi_img = render_primal(s, spp, max_depth, seed)
    s.set_values(vals - step)
    lo_img = render_primal(s, spp, max_depth, seed)
    data = (hi_img.data - lo_img.data) / (2.0 * eps)
    return Image(
        data,
        {"mode": "fd", "param": scene.params.entries[param_index].name,
         "param_index": param_index, "eps": eps, "spp": spp,
         "max_depth": max_depth, "seed": seed},
    )


def fd_gradient_all(scene, eps, spp, max_depth, seed):
    """fd_gradient for every differentiable scalar, as a GradientImage."""
    slices = [fd_gradient(scene, j, eps, spp, max_depth, seed).data
              for j in range(scene.n_params)]
    return GradientImage(
        np.stack(slices, axis=0), scene.params.names(),
        {"mode": "fd", "eps": eps, "spp": spp, "max_depth": max_depth, "seed": seed},
    )


def forward_dual_gradient(scene, spp, max_depth, seed):
    """Dual-number path tracer: throughput arithmetic carries per-parameter
    derivatives while every sampling decision stays detached (primal
    values only). Returns the full GradientImage."""
    w, h = scene.camera.resolution
    p = scene.n_params
    entries = scene.params.entries
    mats = scene.materials
    acc = np.zeros((w * h, p, 3))
    for pids, pixels in _pixel_chunks(scene, spp):
        u = np.stack([rng.uniform(seed, pids, 0), rng.uniform(seed, pids, 1)], axis=-1)
        o, d = scene.camera.primary_rays(pixels, u)
        b = len(pids)
        alive = np.arange(b)
        tput = np.ones((b, 3))
        tjac = np.zeros((b, p, 3))
        prev_pdf = np.zeros(b)
        tmin = np.zeros(b)
        chunk_pixels = pixels

        for depth in range(1, max_depth + 1):
            hit = geometry.intersect(scene.geometry, o, d, tmin)
            live = hit.valid
            if not np.any(live):
                break
            alive = alive[live]
            tput, tjac, prev_pdf = tput[live], tjac[live], prev_pdf[live]
            pid = pids[alive]
            x, n, mat_id = hit.point[live], hit.normal[live], hit.mat_id[live]
            wo = -d[live]

            le, lejac = brdf.emission_dual(mats, mat_id, n, wo, entries, p)
            lejac = np.moveaxis(lejac, 0, 1)  # (B, P, 3)
            lit = np.any(le != 0.0, axis=1) | np.any(lejac != 0.0, axis=(1, 2))
            if np.any(lit):
                if depth == 1:
                    wmis = np.ones(len(pid))
                else:
                    p_e = emitters.direction_pdf_from_hit(
                        scene, hit.t[live], n, hit.shape_id[live], d[live]
                    )
                    wmis = emitters.balance(prev_pdf, p_e)
                cj = tjac * le[:, None, :] + tput[:, None, :] * lejac
                np.add.at(acc, chunk_pixels[alive][lit], (cj * wmis[:, None, None])[lit])

            if depth == max_depth:
                break

            if len(scene.emitters) > 0:
                _, f, fjac, le_y, lejac_y, mu = _nee_contrib(
                    scene, x, n, wo, mat_id, pid, seed,
                    depth_draw(2, depth, K_EPICK), want_dual=True,
                )
                fjac = np.moveaxis(fjac, 0, 1)
                lejac_y = np.moveaxis(lejac_y, 0, 1)
                cj = (tjac * f[:, None, :] + tput[:, None, :] * fjac) * le_y[:, None, :]
                cj += (tput * f)[:, None, :] * lejac_y
                np.add.at(acc, chunk_pixels[alive], cj * mu[:, None, None])

            uu = np.stack(
                [rng.uniform(seed, pid, depth_draw(2, depth, K_BU0)),
                 rng.uniform(seed, pid, depth_draw(2, depth, K_BU1))],
                axis=-1,
            )
            wi, pdf_b, _, ok = brdf.sample(mats, mat_id, n, wo, uu)
            f, fjac = brdf.eval_dual(mats, mat_id, n, wi, wo, entries, p)
            fjac = np.moveaxis(fjac, 0, 1)
            cos_i = dot(n, wi)
            mul = np.where(ok, cos_i / np.where(pdf_b > 0.0, pdf_b, 1.0), 0.0)
            tjac = (tjac * f[:, None, :] + tput[:, None, :] * fjac) * mul[:, None, None]
            tput = tput * f * mul[:, None]
            prev_pdf = pdf_b

            if depth >= RR_DEPTH:
                q = np.clip(luminance(tput), RR_LO, RR_HI)
                u_rr = rng.uniform(seed, pid, depth_draw(2, depth, K_RR))
                ok = ok & (u_rr < q)
                tput = tput / q[:, None]
                tjac = tjac / q[:, None, None]

            keep = ok & (np.any(tput != 0.0, axis=1) | np.any(tjac != 0.0, axis=(1, 2)))
            if not np.any(keep):
                break
            alive = alive[keep]
            tput, tjac, prev_pdf = tput[keep], tjac[keep], prev_pdf[keep]
            o, d = x[keep], wi[keep]
            tmin = np.full(len(alive), scene.ray_eps)

    data = np.moveaxis((acc / spp).reshape(h, w, p, 3), 2, 0)
    return GradientImage(
        data, scene.params.names(),
        {"mode": "forward-dual", "spp": spp, "max_depth": max_depth, "seed": seed},
    )
