"""Build script: compiles the graph fixpoint kernels as a C extension.

The extension is optional; if compilation fails the package falls back to
the pure-Python kernels at import time.
"""

from setuptools import setup
from setuptools.extension import Extension

try:
    from Cython.Build import cythonize
    import numpy

    extensions = cythonize(
        [
            Extension(
                "chakit._graphcore",
                ["src/chakit/_graphcore.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        language_level=3,
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
