import os

import numpy as np
from setuptools import Extension, setup

ext_modules = []
if os.environ.get("GAPSTRAND_PURE_PYTHON", "") not in ("1", "true", "yes"):
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "gapstrand._brkernel",
                ["src/gapstrand/_brkernel.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
