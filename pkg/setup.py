import os

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # no Cython: the pure-Python kernels are used
    cythonize = None

ext_modules = []
if cythonize is not None and not os.environ.get("SSLAB_NO_EXT"):
    ext_modules = cythonize(
        [
            Extension(
                "sslab._ckernels",
                ["src/sslab/_ckernels.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
