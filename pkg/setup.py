import os

import numpy as np
from setuptools import Extension, setup

# QTGN_NO_EXT=1 skips the compiled kernels; the package then runs on its numpy fallback
ext_modules = []
if os.environ.get("QTGN_NO_EXT", "") in ("", "0"):
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "qtgn._ckernels",
                ["src/qtgn/_ckernels.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
