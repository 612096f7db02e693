"""Build the optional compiled kernels.

The package works without them: ``rcising.kernels`` falls back to the
pure-Python implementations when the extension cannot be imported.
"""
import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pragma: no cover - build without Cython
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "rcising._ckernels",
                ["src/rcising/_ckernels.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
