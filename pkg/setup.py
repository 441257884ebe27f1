"""Build script for the optional compiled LSTM-scan core.

The extension is marked optional: if no C toolchain (or Cython) is available
the install still succeeds and the package falls back to the pure-NumPy
kernels at import time.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "gatedfusion.kernels._core",
                ["src/gatedfusion/kernels/_core.pyx"],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
