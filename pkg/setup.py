"""Build the optional Cython kernels.

The pure-Python kernels in ``areaforge._kernels_py`` are used whenever the
compiled module is missing, so a failed build only costs speed.
"""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("AREAFORGE_NO_EXT") != "1":
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "areaforge._kernels",
                    ["src/areaforge/_kernels.pyx"],
                    include_dirs=[numpy.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    optional=True,
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
