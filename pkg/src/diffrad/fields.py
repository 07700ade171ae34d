"""The two neural fields and their residual-norm self-training.

PrimalField represents outgoing radiance as network-plus-emission,
L(x,wo) = N_phi(x,wo) + E(x,wo); DiffField represents its per-parameter
derivative as dL(x,wo) = N_theta(x,wo) + dE(x,wo) with 3 output channels
per differentiable scalar, laid out in ParameterVector order.

Training minimizes the Monte Carlo norm of the transport residual
(LHS minus one-bounce RHS closed through the same network). Surface
points are sampled area-uniformly, outgoing directions uniformly on the
hemisphere (sphere for two-sided materials). The two RHS integrals of
the differential equation share one set of incident directions, drawn
from a 50/50 BSDF/emitter mixture with balance-heuristic density;
directions and densities are detached throughout. Gradients flow through
the LHS query and the network queries inside the RHS scattering term;
the dF*L source term is constant with respect to the trained weights.
"""

from dataclasses import dataclass

import numpy as np

from . import brdf, emitters, geometry, tape as T
from .nn import FieldNet
from .optim import Adam
from .vecmath import dot, normalize

MIN_PDF = 1e-9


def sample_incident_mixture(scene, x, n, mat_id, wo, u_choice, u_bsdf, u_emit):
    """One incident direction per row from the BSDF/emitter mixture.

    Balance-heuristic density pdf = 0.5*pdf_bsdf + 0.5*pdf_emitter, with
    the emitter technique's direction density evaluated against emitter
    geometry only (occlusion lives in the integrand, not the pdf). Scenes
    without emitters degenerate to pure BSDF sampling. Returns
    (wi, pdf, ok); ok=False rows (degenerate pdf) are discards.
    """
    b = len(mat_id)
    wi_b, pdf_bb, _, ok_b = brdf.sample(scene.materials, mat_id, n, wo, u_bsdf)
    has_em = len(scene.emitters) > 0
    if has_em:
        y, ny, _, _ = emitters.sample_emitter_points_u(scene, u_emit)
        delta = y - x
        r = np.sqrt(np.maximum(dot(delta, delta), 1e-18))
        wi_e = delta / r[:, None]
        choose_b = u_choice < 0.5
        wi = np.where(choose_b[:, None], wi_b, wi_e)
        # densities of both techniques for the chosen direction
        pdf_b = brdf.pdf(scene.materials, mat_id, n, wi, wo)
        ehit = geometry.intersect(scene.emitter_geom, x, wi, scene.ray_eps)
        pdf_e = emitters.direction_pdf_from_hit(scene, ehit.t, ehit.normal, ehit.shape_id, wi)
        pdf = 0.5 * pdf_b + 0.5 * pdf_e
    else:
        wi = wi_b
        pdf = pdf_bb
    ok = pdf >= MIN_PDF
    return wi, np.where(ok, pdf, 1.0), ok


@dataclass
class ResidualBatch:
    """Sampled residual points plus shared incident-direction data.

    Per-record constants are pre-evaluated so a loss is a pure function
    of network parameters given the batch.
    """

    x: np.ndarray  # (B,3)
    n: np.ndarray
    mat_id: np.ndarray
    shape_id: np.ndarray
    wo: np.ndarray
    inv_p: np.ndarray  # (B,) 1/p(x,wo)
    fw: np.ndarray  # (M,B,3) f*cos/pdf, zeroed for invalid samples
    mul: np.ndarray  # (M,B) detached cos/pdf multiplier, zeroed invalid
    wi: np.ndarray  # (M,B,3)
    next_x: np.ndarray  # (M,B,3)
    next_n: np.ndarray
    next_mat: np.ndarray
    next_shape: np.ndarray
    next_valid: np.ndarray  # (M,B)
    e_next: np.ndarray  # (M,B,3) emission at next hit toward -wi
    discarded: int

    @property
    def size(self):
        return self.x.shape[0]

    @property
    def m(self):
        return self.fw.shape[0]


def assemble_batch(scene, gen, n_samples, m_incident):
    """Sample (x, wo) pairs and M shared incident directions with next hits."""
    g = scene.geometry
    sb = geometry.sample_surface_uniform(g, gen.random((n_samples, 2)))
    two_sided = scene.materials.two_sided[sb.mat_id]
    u = gen.random((n_samples, 2))
    wo_h, pdf_h = geometry.sample_hemisphere_uniform(sb.normal, u)
    wo_s, pdf_s = geometry.sample_sphere_uniform(u)
    wo = np.where(two_sided[:, None], wo_s, wo_h)
    pdf_dir = np.where(two_sided, pdf_s, pdf_h)
    inv_p = 1.0 / (sb.pdf_area * pdf_dir)

    fw = np.zeros((m_incident, n_samples, 3))
    mul = np.zeros((m_incident, n_samples))
    wi_all = np.zeros((m_incident, n_samples, 3))
    nx = np.zeros((m_incident, n_samples, 3))
    nn_ = np.zeros((m_incident, n_samples, 3))
    nmat = np.zeros((m_incident, n_samples), dtype=np.int32)
    nshape = np.full((m_incident, n_samples), -1, dtype=np.int32)
    nvalid = np.zeros((m_incident, n_samples), dtype=bool)
    e_next = np.zeros((m_incident, n_samples, 3))
    discarded = 0

    for k in range(m_incident):
        wi, pdf, ok = sample_incident_mixture(
            scene, sb.point, sb.normal, sb.mat_id, wo,
            gen.random(n_samples), gen.random((n_samples, 2)), gen.random((n_samples, 3)),
        )
        discarded += int(np.sum(~ok))
        hit = geometry.intersect(g, sb.point, wi, scene.ray_eps)
        valid = ok & hit.valid
        cos_i = dot(sb.normal, wi)
        f = brdf.eval(scene.materials, sb.mat_id, sb.normal, wi, wo)
        w = np.where(valid, cos_i / pdf, 0.0)
        fw[k] = f * w[:, None]
        mul[k] = w
        wi_all[k] = wi
        nx[k] = np.where(valid[:, None], hit.point, sb.point)
        nn_[k] = np.where(valid[:, None], hit.normal, sb.normal)
        nmat[k] = np.where(valid, hit.mat_id, 0)
        nshape[k] = np.where(valid, hit.shape_id, -1)
        nvalid[k] = valid
        e_next[k] = brdf.emission(scene.materials, nmat[k], nn_[k], -wi) * valid[:, None]

    return ResidualBatch(
        x=sb.point, n=sb.normal, mat_id=sb.mat_id, shape_id=sb.shape_id, wo=wo,
        inv_p=inv_p, fw=fw, mul=mul, wi=wi_all, next_x=nx, next_n=nn_, next_mat=nmat,
        next_shape=nshape, next_valid=nvalid, e_next=e_next, discarded=discarded,
    )


def _stacked_net_inputs(batch):
    """LHS row block followed by the M next-hit blocks."""
    xs = np.concatenate([batch.x] + list(batch.next_x), axis=0)
    ns = np.concatenate([batch.n] + list(batch.next_n), axis=0)
    mats = np.concatenate([batch.mat_id] + list(batch.next_mat), axis=0)
    wos = np.concatenate([batch.wo] + list(-batch.wi), axis=0)
    return xs, ns, mats, wos


class PrimalField:
    """Radiance field L_phi = N_phi + E."""

    n_params = 0

    def __init__(self, scene, hidden=(64, 64, 64), grid_res=(8, 16, 32), grid_feat=4, seed=0):
        self.net = FieldNet(scene, hidden, 3, grid_res, grid_feat, seed)

    def radiance(self, scene, x, n, mat_id, shape_id, wo):
        """Rendering-time query: emission-reparametrized, clamped at zero."""
        raw = self.net.forward(scene, x, n, mat_id, wo) + brdf.emission(
            scene.materials, mat_id, n, wo
        )
        return np.maximum(raw, 0.0)

    eval_lhs = radiance

    def eval_rhs(self, scene, x, n, mat_id, shape_id, wo, m_incident, rng_ctx):
        """E + (1/M) sum f cos L_phi(x',-wi)/pdf with mixture sampling."""
        from . import rng

        seed, pids, draw0 = rng_ctx
        out = brdf.emission(scene.materials, mat_id, n, wo).copy()
        for k in range(m_incident):
            base = draw0 + 8 * k
            wi, pdf, ok = sample_incident_mixture(
                scene, x, n, mat_id, wo,
                rng.uniform(seed, pids, base),
                rng.uniform2(seed, pids, base + 1),
                np.stack([rng.uniform(seed, pids, base + 3),
                          rng.uniform(seed, pids, base + 4),
                          rng.uniform(seed, pids, base + 5)], axis=-1),
            )
            hit = geometry.intersect(scene.geometry, x, wi, scene.ray_eps)
            valid = ok & hit.valid
            if not np.any(valid):
                continue
            f = brdf.eval(scene.materials, mat_id, n, wi, wo)
            w = np.where(valid, dot(n, wi) / pdf, 0.0)
            li = np.zeros_like(out)
            li[valid] = self.radiance(
                scene, hit.point[valid], hit.normal[valid], hit.mat_id[valid],
                hit.shape_id[valid], -wi[valid],
            )
            out += f * w[:, None] * li / m_incident
        return out

    def loss_on_batch(self, scene, batch, with_grads=False):
        """Residual-norm loss; optionally also (grads, param list)."""
        tp = T.Tape()
        pv = self.net.wrap_params(tp)
        xs, ns, mats, wos = _stacked_net_inputs(batch)
        netout = self.net.forward_taped(tp, scene, xs, ns, mats, wos, pv)
        b = batch.size
        r = T.rows(netout, slice(0, b))
        for k in range(batch.m):
            nk = T.add(T.rows(netout, slice((k + 1) * b, (k + 2) * b)), batch.e_next[k])
            r = T.sub(r, T.mul(nk, batch.fw[k] / batch.m))
        loss = T.total(T.mul(T.square(r), (batch.inv_p / b)[:, None]))
        if not with_grads:
            return float(loss.data)
        tp.backward(loss)
        return float(loss.data), [p.grad for p in pv]

    def train_step(self, scene, gen, n_samples, m_incident, adam):
        batch = assemble_batch(scene, gen, n_samples, m_incident)
        loss, grads = self.loss_on_batch(scene, batch, with_grads=True)
        gnorm = np.sqrt(sum(float((g * g).sum()) for g in grads if g is not None))
        adam.step(grads)
        return loss, gnorm, batch.discarded

    def residual_loss(self, scene, gen, n_samples, m_incident):
        """Loss estimate without an update. Large M approaches the true
        residual norm (small M adds estimator variance on top)."""
        batch = assemble_batch(scene, gen, n_samples, m_incident)
        return self.loss_on_batch(scene, batch)


class DiffField:
    """Differential radiance field dL_theta = N_theta + dE, one RGB triple
    per differentiable scalar. Requires a frozen primal field for the
    dF*L source term."""

    def __init__(self, scene, primal, hidden=(64, 64, 64), grid_res=(8, 16, 32),
                 grid_feat=4, seed=1):
        self.n_params = scene.n_params
        self.primal = primal
        self.net = FieldNet(scene, hidden, 3 * self.n_params, grid_res, grid_feat, seed)

    def _d_emission(self, scene, mat_id, n, wo):
        _, jac = brdf.emission_dual(
            scene.materials, mat_id, n, wo, scene.params.entries, self.n_params
        )
        return np.moveaxis(jac, 0, 1)  # (B, P, 3)

    def rows(self, scene, x, n, mat_id, shape_id, wo):
        """dL query as (B, n_params, 3): network output plus dE."""
        raw = self.net.forward(scene, x, n, mat_id, wo).reshape(len(x), self.n_params, 3)
        return raw + self._d_emission(scene, mat_id, n, wo)

    eval_lhs = rows

    def eval_rhs(self, scene, x, n, mat_id, shape_id, wo, m_incident, rng_ctx):
        """dE + (1/M) sum [f cos dL(x') + cos dF L_phi(x')]/pdf.

        Both integrals share the same detached incident directions; f and
        dF are evaluated with the scene's current parameters.
        """
        from . import rng

        seed, pids, draw0 = rng_ctx
        out = self._d_emission(scene, mat_id, n, wo).copy()
        entries = scene.params.entries
        for k in range(m_incident):
            base = draw0 + 8 * k
            wi, pdf, ok = sample_incident_mixture(
                scene, x, n, mat_id, wo,
                rng.uniform(seed, pids, base),
                rng.uniform2(seed, pids, base + 1),
                np.stack([rng.uniform(seed, pids, base + 3),
                          rng.uniform(seed, pids, base + 4),
                          rng.uniform(seed, pids, base + 5)], axis=-1),
            )
            hit = geometry.intersect(scene.geometry, x, wi, scene.ray_eps)
            valid = ok & hit.valid
            if not np.any(valid):
                continue
            w = np.where(valid, dot(n, wi) / pdf, 0.0)
            f, df = brdf.eval_dual(scene.materials, mat_id, n, wi, wo, entries, self.n_params)
            dl = np.zeros((len(x), self.n_params, 3))
            dl[valid] = self.rows(
                scene, hit.point[valid], hit.normal[valid], hit.mat_id[valid],
                hit.shape_id[valid], -wi[valid],
            )
            lphi = np.zeros((len(x), 3))
            lphi[valid] = self.primal.radiance(
                scene, hit.point[valid], hit.normal[valid], hit.mat_id[valid],
                hit.shape_id[valid], -wi[valid],
            )
            scatter = f[:, None, :] * dl + np.moveaxis(df, 0, 1) * lphi[:, None, :]
            out += scatter * w[:, None, None] / m_incident
        return out

    def _batch_consts(self, scene, batch):
        """Per-batch constants: flattened dF*cos/pdf*L_phi and dE(next)."""
        b = batch.size
        p = self.n_params
        entries = scene.params.entries
        dfw_l = np.zeros((batch.m, b, 3 * p))
        de_next = np.zeros((batch.m, b, 3 * p))
        for k in range(batch.m):
            _, df = brdf.eval_dual(
                scene.materials, batch.mat_id, batch.n, batch.wi[k], batch.wo,
                entries, p,
            )
            de_next[k] = self._d_emission(
                scene, batch.next_mat[k], batch.next_n[k], -batch.wi[k]
            ).reshape(b, 3 * p) * batch.next_valid[k][:, None]
            lphi = np.zeros((b, 3))
            v = batch.next_valid[k]
            if np.any(v):
                lphi[v] = self.primal.radiance(
                    scene, batch.next_x[k][v], batch.next_n[k][v],
                    batch.next_mat[k][v], batch.next_shape[k][v], -batch.wi[k][v],
                )
            dfw = np.moveaxis(df, 0, 1) * batch.mul[k][:, None, None]  # (B,P,3)
            dfw_l[k] = (dfw * lphi[:, None, :]).reshape(b, 3 * p)
        return dfw_l, de_next

    def loss_on_batch(self, scene, batch, consts, with_grads=False):
        dfw_l, de_next = consts
        tp = T.Tape()
        pv = self.net.wrap_params(tp)
        xs, ns, mats, wos = _stacked_net_inputs(batch)
        netout = self.net.forward_taped(tp, scene, xs, ns, mats, wos, pv)
        b = batch.size
        p = self.n_params
        r = T.rows(netout, slice(0, b))
        for k in range(batch.m):
            nk = T.add(T.rows(netout, slice((k + 1) * b, (k + 2) * b)), de_next[k])
            fw_tiled = np.tile(batch.fw[k], (1, p))
            r = T.sub(r, T.mul(nk, fw_tiled / batch.m))
            r = T.sub(r, dfw_l[k] / batch.m)
        loss = T.total(T.mul(T.square(r), (batch.inv_p / b)[:, None]))
        if not with_grads:
            return float(loss.data)
        tp.backward(loss)
        return float(loss.data), [pp.grad for pp in pv]

    def train_step(self, scene, gen, n_samples, m_incident, adam):
        batch = assemble_batch(scene, gen, n_samples, m_incident)
        consts = self._batch_consts(scene, batch)
        loss, grads = self.loss_on_batch(scene, batch, consts, with_grads=True)
        gnorm = np.sqrt(sum(float((g * g).sum()) for g in grads if g is not None))
        adam.step(grads)
        return loss, gnorm, batch.discarded

    def residual_loss(self, scene, gen, n_samples, m_incident):
        batch = assemble_batch(scene, gen, n_samples, m_incident)
        return self.loss_on_batch(scene, batch, self._batch_consts(scene, batch))
