import os

import numpy as np
from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext

NUMPY_DIR = os.path.dirname(np.__file__)

try:
    from Cython.Build import cythonize
except ImportError:  # the pure-Python fallback takes over
    cythonize = None


class OptionalBuildExt(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:
            print(f"warning: compiled core not built ({exc}); using pure-Python fallback")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: failed to build {ext.name} ({exc}); using pure-Python fallback")


extensions = []
if cythonize is not None:
    extensions = cythonize(
        [
            Extension(
                "cabm._core",
                ["src/cabm/_core.pyx"],
                include_dirs=[np.get_include()],
                library_dirs=[
                    os.path.join(NUMPY_DIR, "random", "lib"),
                    os.path.join(NUMPY_DIR, "_core", "lib"),
                ],
                libraries=["npyrandom", "npymath", "m"],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=extensions, cmdclass={"build_ext": OptionalBuildExt})
