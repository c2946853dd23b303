"""Build script: compiles the optional Cython kernel extension.

The extension is a pure speedup; if the toolchain is unavailable the build
falls back to the numpy kernels selected at import time.
"""

import os

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Build the extension if possible, warn and continue otherwise."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # toolchain missing entirely
            self._warn(exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            self._warn(exc)

    @staticmethod
    def _warn(exc):
        import warnings

        warnings.warn(
            f"icfading: compiled kernels not built ({exc!r}); "
            "falling back to the pure-numpy kernels"
        )


def extensions():
    if os.environ.get("ICFADING_NO_EXT"):
        return []
    import numpy
    from Cython.Build import cythonize

    ext = Extension(
        "icfading._kernels._fastkern",
        ["src/icfading/_kernels/_fastkern.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=["-O3"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(
    ext_modules=extensions(),
    cmdclass={"build_ext": OptionalBuildExt},
)
