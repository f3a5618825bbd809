"""Build the compiled event-loop kernel.

The package works without the extension (a pure-Python twin of the kernel is
selected at import time), so a failed compile only costs speed.
"""

from setuptools import setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "mdqueue.sim._engine_c",
                ["src/mdqueue/sim/_engine_c.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover - build-env dependent
    import sys

    print(f"warning: building without compiled kernel ({exc})", file=sys.stderr)

setup(ext_modules=ext_modules)
