"""Build the optional Cython step kernel.

The extension is optional: when Cython or a C compiler is missing the package
installs without it and ``triwalk.engine`` uses the NumPy kernel instead.
"""
import os

from setuptools import setup

ext_modules = []
if not os.environ.get("TRIWALK_NO_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "triwalk._ckernel",
                    ["src/triwalk/_ckernel.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                    optional=True,
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
