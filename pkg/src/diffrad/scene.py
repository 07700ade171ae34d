"""Scene description, differentiable-parameter registry, and file format.

A scene file is a strict-mode JSON document (unknown keys are errors):

    {
      "camera":    {"position", "look_at", "up", "fov", "resolution"},
      "materials": {name: {"model", "albedo"?, "roughness"?, "eta"?, "k"?,
                           "emission"?, "two_sided"?, "differentiable"?: [fields]}},
      "shapes":    [{"type": "quad"|"sphere"|"tri", "material", ...geometry}]
    }

Differentiable parameters are collected in declaration order: materials in
file order, fields in each material's `differentiable` list order, RGB
fields contributing three consecutive scalars.
"""

import copy
import json
from dataclasses import dataclass, field

import numpy as np

from .geometry import GeometryBuilder
from .vecmath import cross, normalize

DIFFUSE, CONDUCTOR = 0, 1

# Scalar count and clamp range per differentiable field.
PARAM_FIELDS = {
    "albedo": (3, 0.0, 1.0),
    "roughness": (1, 0.01, 1.0),
    "k": (3, 0.0, np.inf),
    "emission": (3, 0.0, np.inf),
}


class SceneError(ValueError):
    """Scene file failed to parse or validate."""


@dataclass
class Camera:
    position: np.ndarray
    look_at: np.ndarray
    up: np.ndarray
    fov: float  # vertical, degrees
    resolution: tuple  # (width, height)

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=np.float64)
        self.look_at = np.asarray(self.look_at, dtype=np.float64)
        self.up = np.asarray(self.up, dtype=np.float64)
        if not (0.0 < self.fov < 180.0):
            raise SceneError(f"camera.fov must be in (0, 180), got {self.fov}")
        w, h = self.resolution
        if w <= 0 or h <= 0:
            raise SceneError(f"camera.resolution must be positive, got {self.resolution}")
        self.resolution = (int(w), int(h))
        fwd = normalize(self.look_at - self.position)
        right = normalize(cross(fwd, self.up))
        self._fwd = fwd
        self._right = right
        self._up = cross(right, fwd)
        self._tan_half = np.tan(np.radians(self.fov) * 0.5)

    def primary_rays(self, pixel_ids, u):
        """Rays through pixels `pixel_ids` (row-major) jittered by u in [0,1)^2."""
        w, h = self.resolution
        px = pixel_ids % w
        py = pixel_ids // w
        sx = (px + u[:, 0]) * (2.0 / w) - 1.0
        sy = 1.0 - (py + u[:, 1]) * (2.0 / h)
        aspect = w / h
        d = (
            self._fwd
            + self._right * (sx * self._tan_half * aspect)[:, None]
            + self._up * (sy * self._tan_half)[:, None]
        )
        o = np.broadcast_to(self.position, d.shape).copy()
        return o, normalize(d)


@dataclass
class MaterialDesc:
    name: str
    model: int  # DIFFUSE | CONDUCTOR
    albedo: np.ndarray
    roughness: float
    eta: np.ndarray
    k: np.ndarray
    emission: np.ndarray
    two_sided: bool
    differentiable: list


class MaterialTable:
    """Struct-of-arrays view over materials for batch shading."""

    def __init__(self, descs):
        m = len(descs)
        self.names = [d.name for d in descs]
        self.model = np.array([d.model for d in descs], dtype=np.int32)
        self.albedo = np.array([d.albedo for d in descs]).reshape(m, 3)
        self.roughness = np.array([d.roughness for d in descs])
        self.eta = np.array([d.eta for d in descs]).reshape(m, 3)
        self.k = np.array([d.k for d in descs]).reshape(m, 3)
        self.emission = np.array([d.emission for d in descs]).reshape(m, 3)
        self.two_sided = np.array([d.two_sided for d in descs], dtype=bool)


@dataclass
class ParamEntry:
    index: int  # scalar index into p
    name: str  # "material.<mat>.<field>"
    mat: int  # material table row
    fld: str  # field name in PARAM_FIELDS
    channel: int  # RGB channel, 0 for scalar fields


class ParameterVector:
    """Ordered registry of the differentiable scene scalars p = (p_1..p_n)."""

    def __init__(self, entries):
        self.entries = entries
        self.index_map = {}
        for e in entries:
            self.index_map.setdefault(e.name, []).append(e.index)

    @property
    def n(self):
        return len(self.entries)

    def names(self):
        return [e.name for e in self.entries]


class Scene:
    def __init__(self, geometry, materials, descs, camera, params):
        self.geometry = geometry
        self.materials = materials
        self.material_descs = descs
        self.camera = camera
        self.params = params
        self.bounds = geometry.bounds()
        diag = float(np.linalg.norm(self.bounds[1] - self.bounds[0]))
        self.ray_eps = 1e-4 * max(diag, 1e-6)
        self._refresh_emitters()

    def _refresh_emitters(self):
        from .geometry import subset_by_shapes

        emis = self.materials.emission[self.geometry.shape_mat]
        self.emitters = np.nonzero(np.any(emis != 0.0, axis=1))[0].astype(np.int32)
        self.emitter_area = self.geometry.shape_area[self.emitters]
        self.emitter_geom = subset_by_shapes(self.geometry, self.emitters)

    @property
    def n_params(self):
        return self.params.n

    def with_camera(self, camera):
        s = copy.copy(self)
        s.camera = camera
        return s

    def fork(self):
        """Copy sharing geometry but with independent material values,
        for parameter perturbations that must not touch the original."""
        s = copy.copy(self)
        s.materials = copy.deepcopy(self.materials)
        s.material_descs = copy.deepcopy(self.material_descs)
        s._refresh_emitters()
        return s

    def get_values(self):
        out = np.empty(self.params.n)
        for e in self.params.entries:
            out[e.index] = self._field_array(e)[e.channel]
        return out

    def set_values(self, vec):
        vec = np.asarray(vec, dtype=np.float64)
        if vec.shape != (self.params.n,):
            raise SceneError(f"expected {self.params.n} parameter values, got {vec.shape}")
        for e in self.params.entries:
            self._set_scalar(e, vec[e.index])
        self._refresh_emitters()
        return self.get_values()

    def get_param(self, key):
        idxs = self._resolve(key)
        vals = self.get_values()[idxs]
        return float(vals[0]) if len(idxs) == 1 else vals

    def set_param(self, key, value):
        """Clamped update; returns the stored value(s)."""
        idxs = self._resolve(key)
        value = np.atleast_1d(np.asarray(value, dtype=np.float64))
        if len(value) != len(idxs):
            raise SceneError(f"parameter {key!r} expects {len(idxs)} value(s)")
        for i, v in zip(idxs, value):
            self._set_scalar(self.params.entries[i], v)
        self._refresh_emitters()
        out = self.get_values()[idxs]
        return float(out[0]) if len(idxs) == 1 else out

    def _resolve(self, key):
        if isinstance(key, (int, np.integer)):
            if not 0 <= key < self.params.n:
                raise SceneError(f"parameter index {key} out of range (n={self.params.n})")
            return [int(key)]
        if key not in self.params.index_map:
            raise SceneError(f"unknown parameter name {key!r}")
        return self.params.index_map[key]

    def _field_array(self, e):
        mats = self.materials
        if e.fld == "roughness":
            return mats.roughness[e.mat : e.mat + 1]
        return getattr(mats, e.fld)[e.mat]

    def _set_scalar(self, e, v):
        lo, hi = PARAM_FIELDS[e.fld][1], PARAM_FIELDS[e.fld][2]
        self._field_array(e)[e.channel] = min(max(float(v), lo), hi)


def _req(obj, key, ctx):
    if key not in obj:
        raise SceneError(f"{ctx}: missing required key '{key}'")
    return obj[key]


def _check_keys(obj, allowed, ctx):
    unknown = set(obj) - set(allowed)
    if unknown:
        raise SceneError(f"{ctx}: unknown key(s) {sorted(unknown)}")


def _vec3(v, ctx, lo=None, hi=None):
    arr = np.asarray(v, dtype=np.float64)
    if arr.shape != (3,):
        raise SceneError(f"{ctx}: expected 3 numbers, got {v!r}")
    if not np.all(np.isfinite(arr)):
        raise SceneError(f"{ctx}: non-finite value")
    if lo is not None and np.any(arr < lo) or hi is not None and np.any(arr > hi):
        raise SceneError(f"{ctx}: value {v!r} outside [{lo}, {hi}]")
    return arr


def scene_from_dict(doc):
    _check_keys(doc, ["camera", "materials", "shapes"], "scene")
    cam = _req(doc, "camera", "scene")
    _check_keys(cam, ["position", "look_at", "up", "fov", "resolution"], "camera")
    camera = Camera(
        position=_vec3(_req(cam, "position", "camera"), "camera.position"),
        look_at=_vec3(_req(cam, "look_at", "camera"), "camera.look_at"),
        up=_vec3(_req(cam, "up", "camera"), "camera.up"),
        fov=float(_req(cam, "fov", "camera")),
        resolution=tuple(_req(cam, "resolution", "camera")),
    )

    mats_doc = _req(doc, "materials", "scene")
    if not mats_doc:
        raise SceneError("scene: at least one material required")
    descs = []
    mat_index = {}
    for name, m in mats_doc.items():
        ctx = f"materials.{name}"
        _check_keys(
            m,
            ["model", "albedo", "roughness", "eta", "k", "emission", "two_sided", "differentiable"],
            ctx,
        )
        model_name = _req(m, "model", ctx)
        if model_name == "diffuse":
            model = DIFFUSE
            albedo = _vec3(_req(m, "albedo", ctx), f"{ctx}.albedo", 0.0, 1.0)
            roughness = 1.0
            eta = np.zeros(3)
            k = np.zeros(3)
            for bad in ("roughness", "eta", "k"):
                if bad in m:
                    raise SceneError(f"{ctx}: '{bad}' is not a diffuse field")
        elif model_name == "rough_conductor":
            model = CONDUCTOR
            albedo = np.zeros(3)
            roughness = float(_req(m, "roughness", ctx))
            if not 0.0 < roughness <= 1.0:
                raise SceneError(f"{ctx}.roughness: {roughness} outside (0, 1]")
            eta = _vec3(_req(m, "eta", ctx), f"{ctx}.eta", 0.0)
            k = _vec3(_req(m, "k", ctx), f"{ctx}.k", 0.0)
            if "albedo" in m:
                raise SceneError(f"{ctx}: 'albedo' is not a rough_conductor field")
        else:
            raise SceneError(f"{ctx}.model: unknown model {model_name!r}")
        emission = _vec3(m.get("emission", [0.0, 0.0, 0.0]), f"{ctx}.emission", 0.0)
        diff_fields = list(m.get("differentiable", []))
        valid = {"albedo", "emission"} if model == DIFFUSE else {"roughness", "k", "emission"}
        for f in diff_fields:
            if f not in valid:
                raise SceneError(f"{ctx}.differentiable: {f!r} not differentiable for {model_name}")
        mat_index[name] = len(descs)
        descs.append(
            MaterialDesc(
                name=name,
                model=model,
                albedo=albedo,
                roughness=roughness,
                eta=eta,
                k=k,
                emission=emission,
                two_sided=bool(m.get("two_sided", False)),
                differentiable=diff_fields,
            )
        )

    shapes_doc = _req(doc, "shapes", "scene")
    if not shapes_doc:
        raise SceneError("scene: at least one shape required")
    builder = GeometryBuilder()
    for i, s in enumerate(shapes_doc):
        ctx = f"shapes[{i}]"
        kind = _req(s, "type", ctx)
        mat_name = _req(s, "material", ctx)
        if mat_name not in mat_index:
            raise SceneError(f"{ctx}.material: unknown material {mat_name!r}")
        mid = mat_index[mat_name]
        if kind == "quad":
            _check_keys(s, ["type", "material", "origin", "edge_u", "edge_v"], ctx)
            builder.add_quad(
                _vec3(_req(s, "origin", ctx), f"{ctx}.origin"),
                _vec3(_req(s, "edge_u", ctx), f"{ctx}.edge_u"),
                _vec3(_req(s, "edge_v", ctx), f"{ctx}.edge_v"),
                mid,
            )
        elif kind == "tri":
            _check_keys(s, ["type", "material", "p0", "p1", "p2"], ctx)
            builder.add_triangle(
                _vec3(_req(s, "p0", ctx), f"{ctx}.p0"),
                _vec3(_req(s, "p1", ctx), f"{ctx}.p1"),
                _vec3(_req(s, "p2", ctx), f"{ctx}.p2"),
                mid,
            )
        elif kind == "sphere":
            _check_keys(s, ["type", "material", "center", "radius"], ctx)
            r = float(_req(s, "radius", ctx))
            if r <= 0:
                raise SceneError(f"{ctx}.radius: must be positive")
            builder.add_sphere(_vec3(_req(s, "center", ctx), f"{ctx}.center"), r, mid)
        else:
            raise SceneError(f"{ctx}.type: unknown shape type {kind!r}")

    entries = []
    for mi, d in enumerate(descs):
        for f in d.differentiable:
            count = PARAM_FIELDS[f][0]
            for c in range(count):
                entries.append(
                    ParamEntry(
                        index=len(entries),
                        name=f"material.{d.name}.{f}",
                        mat=mi,
                        fld=f,
                        channel=c,
                    )
                )

    return Scene(builder.build(), MaterialTable(descs), descs, camera, ParameterVector(entries))


def scene_to_dict(scene):
    """Serialize; material values come from the live table (set_param target)."""
    model_names = {DIFFUSE: "diffuse", CONDUCTOR: "rough_conductor"}
    tbl = scene.materials
    mats = {}
    for mi, d in enumerate(scene.material_descs):
        m = {"model": model_names[d.model]}
        if d.model == DIFFUSE:
            m["albedo"] = list(tbl.albedo[mi])
        else:
            m["roughness"] = float(tbl.roughness[mi])
            m["eta"] = list(tbl.eta[mi])
            m["k"] = list(tbl.k[mi])
        if np.any(tbl.emission[mi] != 0.0):
            m["emission"] = list(tbl.emission[mi])
        if d.two_sided:
            m["two_sided"] = True
        if d.differentiable:
            m["differentiable"] = list(d.differentiable)
        mats[d.name] = m

    g = scene.geometry
    shapes = []
    from .geometry import QUAD, SPHERE, TRI

    for sid in range(g.n_shapes):
        name = scene.material_descs[g.shape_mat[sid]].name
        kind = g.shape_kind[sid]
        if kind == QUAD:
            shapes.append(
                {"type": "quad", "material": name, "origin": list(g.shape_o[sid]),
                 "edge_u": list(g.shape_eu[sid]), "edge_v": list(g.shape_ev[sid])}
            )
        elif kind == TRI:
            o = g.shape_o[sid]
            shapes.append(
                {"type": "tri", "material": name, "p0": list(o),
                 "p1": list(o + g.shape_eu[sid]), "p2": list(o + g.shape_ev[sid])}
            )
        elif kind == SPHERE:
            shapes.append(
                {"type": "sphere", "material": name, "center": list(g.shape_o[sid]),
                 "radius": float(g.shape_eu[sid][0])}
            )
    cam = scene.camera
    return {
        "camera": {
            "position": list(cam.position),
            "look_at": list(cam.look_at),
            "up": list(cam.up),
            "fov": cam.fov,
            "resolution": list(cam.resolution),
        },
        "materials": mats,
        "shapes": shapes,
    }


def load_scene(path):
    try:
        with open(path, "r", encoding="utf-8") as f:
            doc = json.load(f)
    except json.JSONDecodeError as e:
        raise SceneError(f"{path}: parse error at line {e.lineno}, column {e.colno}: {e.msg}")
    try:
        return scene_from_dict(doc)
    except SceneError as e:
        raise SceneError(f"{path}: {e}") from None


def save_scene(scene, path):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(scene_to_dict(scene), f, indent=2)
        f.write("\n")
