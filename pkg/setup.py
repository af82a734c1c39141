import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("SPANPLAN_PURE") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "spanplan._kernels._speedups",
                    ["src/spanplan/_kernels/_speedups.pyx"],
                )
            ],
            language_level="3",
        )
    except ImportError:
        # No Cython available: install the pure-Python kernels only.
        ext_modules = []

setup(ext_modules=ext_modules)
