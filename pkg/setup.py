"""Build script for the optional Cython kernel extension.

The package is fully functional without the extension (a NumPy fallback is
selected at import time), so the extension is marked optional: a failing
compiler does not fail the install.
"""

import numpy
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = cythonize(
    [
        Extension(
            "sketchlab._kernels",
            ["src/sketchlab/_kernels.pyx"],
            include_dirs=[numpy.get_include()],
            # -ffast-math lets the compiler vectorize exp() through libmvec;
            # the kernels are written to be safe under it (finite inputs only)
            extra_compile_args=["-O3", "-ffast-math", "-march=native"],
            define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            optional=True,
        )
    ],
    compiler_directives={
        "language_level": 3,
        "boundscheck": False,
        "wraparound": False,
        "cdivision": True,
        "initializedcheck": False,
    },
)

setup(ext_modules=extensions)
