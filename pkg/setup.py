"""Build script: compiles the optional Cython kernel module.

The package is fully functional without the extension (a NumPy/pure-Python
fallback is selected at import); the build therefore treats the extension
as optional and never fails the install over it.
"""
from setuptools import Extension, setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "bsea2._core",
                ["src/bsea2/_core.pyx"],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        language_level="3",
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
