"""MLP + multi-resolution feature grids: the trainable function behind
both radiance fields.

The network input is [normalized position, outgoing direction, shading
normal, diffuse reflectance, specular reflectance proxy, grid features].
Hidden activations are ReLU; the output is unclamped (differential
radiance is signed; the primal field is clamped only at render time).
"""

import numpy as np

from . import tape as T
from .scene import CONDUCTOR, DIFFUSE

ENC_CONST_WIDTH = 15


class MLP:
    """Fully-connected net; weights stored (in, out) per layer.

    Final layer initialized to zero so a fresh field is exactly the
    reparametrized emission term.
    """

    def __init__(self, in_width, hidden, out_width, seed=0):
        self.in_width = in_width
        self.hidden = list(hidden)
        self.out_width = out_width
        gen = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
        dims = [in_width] + self.hidden + [out_width]
        self.weights = []
        self.biases = []
        for i, (fan_in, fan_out) in enumerate(zip(dims[:-1], dims[1:])):
            last = i == len(dims) - 2
            w = (
                np.zeros((fan_in, fan_out))
                if last
                else gen.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_in, fan_out))
            )
            self.weights.append(w)
            self.biases.append(np.zeros(fan_out))

    def params(self):
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out

    def forward(self, x):
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            x = x @ w + b
            if i < len(self.weights) - 1:
                x = np.maximum(x, 0.0)
        return x

    def forward_taped(self, tp, x, param_vars):
        """x: Var or const (B, in); param_vars from `wrap_params`."""
        for i in range(len(self.weights)):
            w, b = param_vars[2 * i], param_vars[2 * i + 1]
            x = T.add(T.matmul(x, w), b)
            if i < len(self.weights) - 1:
                x = T.relu(x)
        return x


class FeatureGrid:
    """One dense trilinear level over the scene bounding box."""

    def __init__(self, res, feat_dim, seed=0):
        if res < 2:
            raise ValueError("grid resolution must be >= 2")
        self.res = res
        self.feat_dim = feat_dim
        gen = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
        self.data = gen.uniform(-1e-4, 1e-4, size=(res**3, feat_dim))

    def corners(self, pos01):
        """(idx (B,8), w (B,8)) trilinear corners/weights for positions in [0,1]^3."""
        g = pos01 * (self.res - 1)
        i0 = np.minimum(g.astype(np.int64), self.res - 2)
        f = g - i0
        r = self.res
        base = (i0[:, 0] * r + i0[:, 1]) * r + i0[:, 2]
        idx = np.empty((len(pos01), 8), dtype=np.int64)
        w = np.empty((len(pos01), 8))
        k = 0
        for dx in (0, 1):
            wx = f[:, 0] if dx else 1.0 - f[:, 0]
            for dy in (0, 1):
                wy = f[:, 1] if dy else 1.0 - f[:, 1]
                for dz in (0, 1):
                    wz = f[:, 2] if dz else 1.0 - f[:, 2]
                    idx[:, k] = base + (dx * r + dy) * r + dz
                    w[:, k] = wx * wy * wz
                    k += 1
        return idx, w

    def forward(self, pos01):
        idx, w = self.corners(pos01)
        return np.einsum("bjf,bj->bf", self.data[idx], w)


class FieldNet:
    """MLP + grids + the scene-space normalization they share."""

    def __init__(self, scene, hidden, out_width, grid_res=(8, 16, 32), grid_feat=4, seed=0):
        lo, hi = scene.bounds
        self.lo = lo
        self.span = np.maximum(hi - lo, 1e-9)
        self.grids = [
            FeatureGrid(r, grid_feat, seed=seed * 1000 + 7 * i + 1)
            for i, r in enumerate(grid_res)
        ]
        in_width = ENC_CONST_WIDTH + grid_feat * len(self.grids)
        self.mlp = MLP(in_width, hidden, out_width, seed=seed * 1000)
        self.clamped_queries = 0

    def params(self):
        return self.mlp.params() + [g.data for g in self.grids]

    def set_params(self, arrays):
        mine = self.params()
        if len(arrays) != len(mine):
            raise ValueError(f"expected {len(mine)} parameter arrays, got {len(arrays)}")
        for dst, src in zip(mine, arrays):
            if dst.shape != src.shape:
                raise ValueError(f"parameter shape mismatch: {dst.shape} vs {src.shape}")
            dst[...] = src

    def normalized(self, x):
        p = (np.atleast_2d(x) - self.lo) / self.span
        out = np.clip(p, 0.0, 1.0)
        self.clamped_queries += int(np.sum(np.any(p != out, axis=1)))
        return out

    def encode_const(self, scene, x, n, mat_id, wo):
        """The non-learnable encoding block, (B, 15)."""
        mats = scene.materials
        pos = self.normalized(x)
        diffuse = np.where(
            (mats.model[mat_id] == DIFFUSE)[:, None], mats.albedo[mat_id], 0.0
        )
        eta = mats.eta[mat_id]
        k = mats.k[mat_id]
        f0 = ((eta - 1.0) ** 2 + k**2) / ((eta + 1.0) ** 2 + k**2)
        spec = np.where((mats.model[mat_id] == CONDUCTOR)[:, None], f0, 0.0)
        return np.concatenate([pos, np.atleast_2d(wo), np.atleast_2d(n), diffuse, spec], axis=1), pos

    def forward(self, scene, x, n, mat_id, wo):
        const, pos = self.encode_const(scene, x, n, mat_id, wo)
        feats = [g.forward(pos) for g in self.grids]
        return self.mlp.forward(np.concatenate([const] + feats, axis=1))

    def wrap_params(self, tp):
        """Fresh leaf Vars sharing the parameter arrays, for one step."""
        return [tp.var(p) for p in self.params()]

    def forward_taped(self, tp, scene, x, n, mat_id, wo, param_vars):
        const, pos = self.encode_const(scene, x, n, mat_id, wo)
        n_mlp = 2 * len(self.mlp.weights)
        feat_vars = []
        for g, gv in zip(self.grids, param_vars[n_mlp:]):
            idx, w = g.corners(pos)
            feat_vars.append(T.gather_weighted(gv, idx, w))
        enc = T.concat([const] + feat_vars, axis=1)
        return self.mlp.forward_taped(tp, enc, param_vars)

    def config(self):
        return {
            "in_width": self.mlp.in_width,
            "hidden": self.mlp.hidden,
            "out_width": self.mlp.out_width,
            "grid_res": [g.res for g in self.grids],
            "grid_feat": self.grids[0].feat_dim if self.grids else 0,
        }
