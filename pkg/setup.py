import numpy as np
from setuptools import Extension, setup
from Cython.Build import cythonize

# -ffp-contract=off keeps the compiled kernels bit-identical to the numpy
# fallback (no FMA contraction); do not add -ffast-math for the same reason.
ext = Extension(
    "diffrad._core",
    sources=["src/diffrad/_core.pyx"],
    include_dirs=[np.get_include()],
    extra_compile_args=["-O3", "-ffp-contract=off"],
    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
)

setup(ext_modules=cythonize([ext], language_level=3))
