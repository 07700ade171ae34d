"""Binary checkpoints for a FieldNet (+ optional Adam moments).

Layout (little-endian):
  magic  b"DNRC"
  u32    version = 1
  u32    n_layers,   then per layer: u32 out, u32 in
  u32    n_levels,   then per level: u32 res
  u32    feat_dim
  u32    n_params    (differential output channel count / 3; 0 for primal)
  u32    flags       (bit 0: optimizer moments present)
  u64    adam_step   (present iff flag bit 0)
  f64[]  weights then biases per layer, then grid features, declaration order
  f64[]  optimizer first moments then second moments, same order (optional)
"""

import struct

import numpy as np

MAGIC = b"DNRC"
VERSION = 1


class CheckpointError(ValueError):
    pass


def save_checkpoint(path, net, n_params=0, adam=None):
    mlp = net.mlp
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", VERSION))
        f.write(struct.pack("<I", len(mlp.weights)))
        for w in mlp.weights:
            f.write(struct.pack("<II", w.shape[1], w.shape[0]))  # out, in
        f.write(struct.pack("<I", len(net.grids)))
        for g in net.grids:
            f.write(struct.pack("<I", g.res))
        f.write(struct.pack("<I", net.grids[0].feat_dim if net.grids else 0))
        f.write(struct.pack("<I", n_params))
        f.write(struct.pack("<I", 1 if adam is not None else 0))
        if adam is not None:
            f.write(struct.pack("<Q", adam.step_count))
        for p in net.params():
            f.write(np.ascontiguousarray(p, dtype="<f8").tobytes())
        if adam is not None:
            for a in adam.state_arrays():
                f.write(np.ascontiguousarray(a, dtype="<f8").tobytes())


def _read(f, fmt):
    size = struct.calcsize(fmt)
    buf = f.read(size)
    if len(buf) != size:
        raise CheckpointError("checkpoint truncated")
    return struct.unpack(fmt, buf)


def load_checkpoint(path, net, adam=None):
    """Load into `net` (and `adam`), validating every recorded shape.

    Returns the stored n_params so callers can check field compatibility.
    """
    mlp = net.mlp
    with open(path, "rb") as f:
        if f.read(4) != MAGIC:
            raise CheckpointError(f"{path}: bad magic (not a checkpoint)")
        (version,) = _read(f, "<I")
        if version != VERSION:
            raise CheckpointError(f"{path}: unsupported version {version}")
        (n_layers,) = _read(f, "<I")
        if n_layers != len(mlp.weights):
            raise CheckpointError(
                f"{path}: has {n_layers} layers, net expects {len(mlp.weights)}"
            )
        for i in range(n_layers):
            out_w, in_w = _read(f, "<II")
            exp = mlp.weights[i]
            if (out_w, in_w) != (exp.shape[1], exp.shape[0]):
                raise CheckpointError(
                    f"{path}: layer {i} is {out_w}x{in_w}, net expects "
                    f"{exp.shape[1]}x{exp.shape[0]}"
                )
        (n_levels,) = _read(f, "<I")
        if n_levels != len(net.grids):
            raise CheckpointError(f"{path}: has {n_levels} grid levels, net expects {len(net.grids)}")
        for i in range(n_levels):
            (res,) = _read(f, "<I")
            if res != net.grids[i].res:
                raise CheckpointError(
                    f"{path}: grid level {i} resolution {res}, net expects {net.grids[i].res}"
                )
        (feat_dim,) = _read(f, "<I")
        expect_feat = net.grids[0].feat_dim if net.grids else 0
        if feat_dim != expect_feat:
            raise CheckpointError(f"{path}: feature dim {feat_dim}, net expects {expect_feat}")
        (n_params,) = _read(f, "<I")
        (flags,) = _read(f, "<I")
        adam_step = 0
        if flags & 1:
            (adam_step,) = _read(f, "<Q")

        def read_arrays(targets):
            for t in targets:
                buf = f.read(t.size * 8)
                if len(buf) != t.size * 8:
                    raise CheckpointError(f"{path}: checkpoint truncated")
                t[...] = np.frombuffer(buf, dtype="<f8").reshape(t.shape)

        read_arrays(net.params())
        if adam is not None:
            if not flags & 1:
                raise CheckpointError(f"{path}: no optimizer state stored")
            read_arrays(adam.state_arrays())
            adam.step_count = adam_step
    return n_params
