"""Image containers and file formats (PFM, PPM previews, JSON sidecars).

PFM: header "PF\\n<w> <h>\\n-1.0\\n", little-endian float32 triples,
bottom-up rows. Gradient images are one PFM per parameter slice with
suffix `.p<j>.pfm`; signed data is written raw and previews use a
symmetric diverging map whose scale is returned/printed.
"""

import json
import os
from dataclasses import dataclass, field

import numpy as np


@dataclass
class Image:
    """HDR radiance (or derivative) image, data shape (H, W, 3), row 0 = top."""

    data: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def width(self):
        return self.data.shape[1]

    @property
    def height(self):
        return self.data.shape[0]


@dataclass
class GradientImage:
    """Per-parameter derivative slices, data shape (P, H, W, 3)."""

    data: np.ndarray
    param_names: list
    meta: dict = field(default_factory=dict)

    @property
    def n_params(self):
        return self.data.shape[0]

    def slice(self, j):
        return Image(self.data[j], dict(self.meta, param=self.param_names[j]))


def write_pfm(path, data):
    data = np.asarray(data, dtype=np.float32)
    h, w, _ = data.shape
    with open(path, "wb") as f:
        f.write(b"PF\n")
        f.write(f"{w} {h}\n".encode())
        f.write(b"-1.0\n")
        f.write(np.ascontiguousarray(data[::-1]).tobytes())


def read_pfm(path):
    with open(path, "rb") as f:
        if f.readline().strip() != b"PF":
            raise ValueError(f"{path}: not a color PFM")
        w, h = map(int, f.readline().split())
        scale = float(f.readline())
        data = np.frombuffer(f.read(w * h * 12), dtype="<f4" if scale < 0 else ">f4")
    return data.reshape(h, w, 3)[::-1].astype(np.float64)


def _srgb(x):
    x = np.clip(x, 0.0, 1.0)
    return np.where(x <= 0.0031308, 12.92 * x, 1.055 * np.power(x, 1 / 2.4) - 0.055)


def write_ppm(path, data, exposure=1.0):
    """Tone-mapped 8-bit preview (sRGB, clamped)."""
    rgb = np.round(_srgb(np.asarray(data) * exposure) * 255.0).astype(np.uint8)
    h, w, _ = rgb.shape
    with open(path, "wb") as f:
        f.write(f"P6\n{w} {h}\n255\n".encode())
        f.write(rgb.tobytes())


def write_diverging_ppm(path, data, scale=None):
    """Signed-data preview: blue (negative) / white (zero) / red (positive).

    Returns the symmetric scale used (max |value| unless given).
    """
    data = np.asarray(data)
    lum = data.mean(axis=-1)
    if scale is None:
        scale = float(np.max(np.abs(lum))) or 1.0
    t = np.clip(lum / scale, -1.0, 1.0)
    pos = np.clip(t, 0.0, 1.0)[..., None]
    neg = np.clip(-t, 0.0, 1.0)[..., None]
    white = np.ones_like(pos)
    rgb = (white - pos * [0.0, 0.8, 0.9] - neg * [0.9, 0.65, 0.0]) * 255.0
    h, w, _ = data.shape
    with open(path, "wb") as f:
        f.write(f"P6\n{w} {h}\n255\n".encode())
        f.write(np.round(rgb).astype(np.uint8).tobytes())
    return scale


def write_sidecar(path, meta):
    """Reproducibility record next to an artifact (full config + seed)."""
    with open(path + ".json", "w", encoding="utf-8") as f:
        json.dump(meta, f, indent=2, sort_keys=True, default=_jsonable)
        f.write("\n")


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    raise TypeError(f"not JSON-serializable: {type(x)}")


def save_image(path, img, preview=True):
    write_pfm(path, img.data)
    write_sidecar(path, img.meta)
    if preview:
        write_ppm(os.path.splitext(path)[0] + ".ppm", img.data)


def save_gradient_image(path_base, gimg, preview=True):
    """Writes `<base>.p<j>.pfm` per slice; returns (paths, preview scale)."""
    paths = []
    scale = float(np.max(np.abs(gimg.data.mean(axis=-1)))) if gimg.data.size else 1.0
    scale = scale or 1.0
    base = path_base[:-4] if path_base.endswith(".pfm") else path_base
    for j in range(gimg.n_params):
        p = f"{base}.p{j}.pfm"
        write_pfm(p, gimg.data[j])
        if preview:
            write_diverging_ppm(f"{base}.p{j}.ppm", gimg.data[j], scale)
        paths.append(p)
    write_sidecar(base, dict(gimg.meta, params=gimg.param_names, preview_scale=scale))
    return paths, scale
