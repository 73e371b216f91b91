import os

import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

# Set PSALINK_NO_EXT=1 to install the pure-Python fallback only.
if os.environ.get("PSALINK_NO_EXT"):
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "psalink._ssfm_ext",
                ["src/psalink/_ssfm_ext.pyx"],
                include_dirs=[np.get_include()],
                libraries=["fftw3", "m"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
