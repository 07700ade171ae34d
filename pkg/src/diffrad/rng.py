"""Counter-based random numbers for renderers, stream RNG for training.

Rendering draws are pure functions of (seed, path_id, draw_index): the
value a path sees does not depend on wavefront chunking or on how many
other paths are alive, which is what makes renders bit-reproducible and
lets finite differences share sample streams across perturbed scenes.
"""

import numpy as np

_K1 = np.uint64(0x9E3779B97F4A7C15)
_K2 = np.uint64(0xBF58476D1CE4E5B9)
_K3 = np.uint64(0x94D049BB133111EB)
_INV_2_53 = 1.0 / 9007199254740992.0  # 2^-53


def _mix(z):
    z = (z ^ (z >> np.uint64(30))) * _K2
    z = (z ^ (z >> np.uint64(27))) * _K3
    return z ^ (z >> np.uint64(31))


def hash_u64(seed, path_id, draw):
    """splitmix64-style finalizer over the (seed, path, draw) triple."""
    with np.errstate(over="ignore"):
        s = np.uint64(seed) * _K1
        z = np.asarray(path_id, dtype=np.uint64) * _K2
        z = _mix(z ^ s)
        z = _mix(z ^ (np.uint64(draw) * _K3))
    return z


def uniform(seed, path_id, draw):
    """U[0,1) draw `draw` of path `path_id`, vectorized over path_id."""
    z = hash_u64(seed, path_id, draw)
    return (z >> np.uint64(11)).astype(np.float64) * _INV_2_53


def uniform2(seed, path_id, draw):
    """Two consecutive draws as an (N, 2) array."""
    return np.stack([uniform(seed, path_id, draw), uniform(seed, path_id, draw + 1)], axis=-1)


def make_generator(seed):
    """Sequential stream for training loops (Philox, fixed key)."""
    return np.random.Generator(np.random.Philox(key=np.uint64(seed)))
