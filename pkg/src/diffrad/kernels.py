"""Backend dispatch for the intersection kernels.

The compiled extension is preferred; the numpy twin is selected when it
is missing or when DIFFRAD_BACKEND=python is set. Both produce
bit-identical results (tests/test_kernels.py asserts this).
"""

import os

from . import kernels_py

BACKEND = "python"
intersect_rays = kernels_py.intersect_rays
occluded_rays = kernels_py.occluded_rays

if os.environ.get("DIFFRAD_BACKEND", "").lower() not in ("python", "py"):
    try:
        from . import _core

        intersect_rays = _core.intersect_rays
        occluded_rays = _core.occluded_rays
        BACKEND = "compiled"
    except ImportError:
        pass
