"""Build script for the optional compiled simulation kernel.

Metadata lives in pyproject.toml.  If Cython or a C compiler is unavailable the
package still installs and the simulator falls back to the pure-Python kernel.
"""
import os

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # noqa: BLE001 - any toolchain failure is non-fatal
            self.warn(f"compiled kernel not built ({exc}); using the pure-Python kernel")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # noqa: BLE001
            self.warn(f"compiled kernel not built ({exc}); using the pure-Python kernel")


def extensions():
    if os.environ.get("GLUEPOLL_NO_EXT"):
        return []
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "gluepoll.sim._ckernel",
        ["src/gluepoll/sim/_ckernel.pyx"],
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], language_level="3", quiet=True)


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
