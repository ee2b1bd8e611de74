"""Build the optional compiled trajectory kernel.

If Cython or a C compiler is unavailable the package still installs and the
numpy kernel is used.
"""

import os

from setuptools import setup

ext_modules = []
if os.environ.get("C4SIM_NO_EXT", "") != "1":
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "c4sim.sim._traj",
                    ["src/c4sim/sim/_traj.pyx"],
                    include_dirs=[numpy.get_include()],
                    extra_compile_args=["-O3"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
