"""Build script for the compiled interval kernels.

The package works without the extension (a pure-Python backend is selected
at import time), but the hot loops are 50-200x faster compiled.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "odebnb._core",
                ["src/odebnb/_core.pyx"],
                # fp-contract must stay off: the rounding tests rely on
                # exact IEEE semantics of individual ops
                extra_compile_args=["-O2", "-ffp-contract=off", "-mfma"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
