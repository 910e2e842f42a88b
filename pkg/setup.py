"""Build script for the optional compiled tree kernels.

The package works without the extension: sonotag._kernels falls back to
the numpy implementation when the compiled module is absent.
"""

from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "sonotag._kernels._gbdt_cy",
                ["src/sonotag/_kernels/_gbdt_cy.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
