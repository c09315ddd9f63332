import os

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

# Set GFXLAB_NO_NATIVE=1 to skip the compiled kernels (the numpy fallback
# is selected automatically at import time).
ext_modules = []
if cythonize is not None and os.environ.get("GFXLAB_NO_NATIVE") != "1":
    ext_modules = cythonize(
        [
            Extension(
                "gfxlab.kernels._native",
                ["src/gfxlab/kernels/_native.pyx"],
                extra_compile_args=["-O3", "-march=native", "-fopenmp"],
                extra_link_args=["-fopenmp"],
            )
        ],
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )

setup(ext_modules=ext_modules)
