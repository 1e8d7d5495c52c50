"""Build script: compiles the optional Cython training kernel.

The package is fully functional without the extension (a NumPy fallback is
selected at import time), so the extension build is best-effort.
"""

import numpy as np
from setuptools import Extension, setup

ext = Extension(
    "anisofl._kernels",
    sources=["src/anisofl/_kernels.pyx"],
    include_dirs=[np.get_include()],
    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    extra_compile_args=["-O3", "-march=native"],
    optional=True,
)

try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [ext],
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
