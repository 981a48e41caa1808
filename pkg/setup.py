import os

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-Python install; bridged.kernels falls back
    cythonize = None

ext_modules = []
if cythonize is not None and not os.environ.get("BRIDGED_NO_EXT"):
    np_random_lib = os.path.join(os.path.dirname(np.__file__), "random", "lib")
    ext_modules = cythonize(
        [
            Extension(
                "bridged._kernels",
                ["src/bridged/_kernels.pyx"],
                include_dirs=[np.get_include()],
                library_dirs=[np_random_lib],
                libraries=["npyrandom", "m"],
                extra_compile_args=["-O2"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
