"""Built-in test scenes.

`analytic`: one diffuse receiver quad under one parallel quad lamp with a
black-albedo emitter, so radiance has a closed form (single reflection,
no interreflection). `cbox`: Cornell-box variant with a diffuse and a
rough-conductor sphere and seven differentiable scalars. `cbox_closed`:
closed high-albedo box for path-length scaling measurements.
"""

from .scene import scene_from_dict

ANALYTIC = {
    "camera": {
        "position": [0.0, -2.6, 1.0],
        "look_at": [0.0, 0.0, 0.0],
        "up": [0.0, 0.0, 1.0],
        "fov": 45.0,
        "resolution": [64, 64],
    },
    "materials": {
        "surface": {
            "model": "diffuse",
            "albedo": [0.7, 0.5, 0.3],
            "differentiable": ["albedo"],
        },
        "lamp": {
            "model": "diffuse",
            "albedo": [0.0, 0.0, 0.0],
            "emission": [15.0, 15.0, 15.0],
        },
    },
    "shapes": [
        {"type": "quad", "material": "surface",
         "origin": [-1.0, -1.0, 0.0], "edge_u": [2.0, 0.0, 0.0], "edge_v": [0.0, 2.0, 0.0]},
        {"type": "quad", "material": "lamp",
         "origin": [-0.4, -0.4, 1.5], "edge_u": [0.0, 0.8, 0.0], "edge_v": [0.8, 0.0, 0.0]},
    ],
}

CBOX = {
    "camera": {
        "position": [0.5, -1.35, 0.5],
        "look_at": [0.5, 1.0, 0.5],
        "up": [0.0, 0.0, 1.0],
        "fov": 42.0,
        "resolution": [64, 64],
    },
    "materials": {
        "white": {"model": "diffuse", "albedo": [0.73, 0.73, 0.73]},
        "back": {"model": "diffuse", "albedo": [0.8, 0.8, 0.8], "differentiable": ["albedo"]},
        "red": {"model": "diffuse", "albedo": [0.63, 0.065, 0.05]},
        "green": {"model": "diffuse", "albedo": [0.14, 0.45, 0.091]},
        "ball": {"model": "diffuse", "albedo": [0.75, 0.55, 0.25]},
        "metal": {"model": "rough_conductor", "roughness": 0.4,
                  "eta": [0.2, 0.92, 1.1], "k": [3.9, 2.4, 2.2],
                  "differentiable": ["roughness", "k"]},
        "light": {"model": "diffuse", "albedo": [0.0, 0.0, 0.0], "emission": [17.0, 13.0, 6.0]},
    },
    "shapes": [
        {"type": "quad", "material": "white",
         "origin": [0.0, 0.0, 0.0], "edge_u": [1.0, 0.0, 0.0], "edge_v": [0.0, 1.0, 0.0]},
        {"type": "quad", "material": "white",
         "origin": [0.0, 0.0, 1.0], "edge_u": [0.0, 1.0, 0.0], "edge_v": [1.0, 0.0, 0.0]},
        {"type": "quad", "material": "back",
         "origin": [0.0, 1.0, 0.0], "edge_u": [1.0, 0.0, 0.0], "edge_v": [0.0, 0.0, 1.0]},
        {"type": "quad", "material": "red",
         "origin": [0.0, 0.0, 0.0], "edge_u": [0.0, 1.0, 0.0], "edge_v": [0.0, 0.0, 1.0]},
        {"type": "quad", "material": "green",
         "origin": [1.0, 0.0, 0.0], "edge_u": [0.0, 0.0, 1.0], "edge_v": [0.0, 1.0, 0.0]},
        {"type": "quad", "material": "light",
         "origin": [0.35, 0.35, 0.9985], "edge_u": [0.0, 0.3, 0.0], "edge_v": [0.3, 0.0, 0.0]},
        {"type": "sphere", "material": "ball", "center": [0.3, 0.35, 0.18], "radius": 0.18},
        {"type": "sphere", "material": "metal", "center": [0.68, 0.62, 0.2], "radius": 0.2},
    ],
}

# Alternate viewpoints for view-independence checks (same scene, new sensor).
CBOX_CAMERAS = {
    "front": CBOX["camera"],
    "high_left": {
        "position": [0.12, -1.15, 0.85],
        "look_at": [0.55, 0.6, 0.35],
        "up": [0.0, 0.0, 1.0],
        "fov": 45.0,
        "resolution": [64, 64],
    },
    "low_right": {
        "position": [0.88, -1.05, 0.22],
        "look_at": [0.45, 0.65, 0.45],
        "up": [0.0, 0.0, 1.0],
        "fov": 48.0,
        "resolution": [64, 64],
    },
}


def _closed_box():
    doc = {
        "camera": {
            "position": [0.5, 0.04, 0.5],
            "look_at": [0.5, 1.0, 0.5],
            "up": [0.0, 0.0, 1.0],
            "fov": 75.0,
            "resolution": [64, 64],
        },
        "materials": {
            "bright": {"model": "diffuse", "albedo": [0.9, 0.9, 0.9], "differentiable": ["albedo"]},
            "light": {"model": "diffuse", "albedo": [0.0, 0.0, 0.0], "emission": [10.0, 10.0, 10.0]},
        },
        "shapes": [
            {"type": "quad", "material": "bright",
             "origin": [0.0, 0.0, 0.0], "edge_u": [1.0, 0.0, 0.0], "edge_v": [0.0, 1.0, 0.0]},
            {"type": "quad", "material": "bright",
             "origin": [0.0, 0.0, 1.0], "edge_u": [0.0, 1.0, 0.0], "edge_v": [1.0, 0.0, 0.0]},
            {"type": "quad", "material": "bright",
             "origin": [0.0, 1.0, 0.0], "edge_u": [1.0, 0.0, 0.0], "edge_v": [0.0, 0.0, 1.0]},
            {"type": "quad", "material": "bright",
             "origin": [0.0, 0.0, 0.0], "edge_u": [0.0, 0.0, 1.0], "edge_v": [1.0, 0.0, 0.0]},
            {"type": "quad", "material": "bright",
             "origin": [0.0, 0.0, 0.0], "edge_u": [0.0, 1.0, 0.0], "edge_v": [0.0, 0.0, 1.0]},
            {"type": "quad", "material": "bright",
             "origin": [1.0, 0.0, 0.0], "edge_u": [0.0, 0.0, 1.0], "edge_v": [0.0, 1.0, 0.0]},
            {"type": "quad", "material": "light",
             "origin": [0.35, 0.35, 0.9985], "edge_u": [0.0, 0.3, 0.0], "edge_v": [0.3, 0.0, 0.0]},
        ],
    }
    return doc


CBOX_CLOSED = _closed_box()

BUILTIN = {"analytic": ANALYTIC, "cbox": CBOX, "cbox_closed": CBOX_CLOSED}


def make_scene(name):
    if name not in BUILTIN:
        raise KeyError(f"unknown builtin scene {name!r} (have {sorted(BUILTIN)})")
    return scene_from_dict(BUILTIN[name])


def write_builtin_scenes(out_dir):
    import json
    import os

    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for name, doc in BUILTIN.items():
        p = os.path.join(out_dir, f"{name}.json")
        with open(p, "w", encoding="utf-8") as f:
            json.dump(doc, f, indent=2)
            f.write("\n")
        paths.append(p)
    return paths
