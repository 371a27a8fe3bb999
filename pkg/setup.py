import os

import numpy as np
from setuptools import Extension, setup

# PREAMBLEDET_NO_EXT=1 skips the compiled kernel; the package then runs on the numpy fallback.
ext_modules = []
if not os.environ.get("PREAMBLEDET_NO_EXT"):
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "preambledet._split_ext",
                ["src/preambledet/_split_ext.pyx"],
                include_dirs=[np.get_include()],
                # no fast-math / fp contraction: split scores must match the fallback bit for bit
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
