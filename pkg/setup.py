"""Build script for the optional compiled oracle kernel.

The package is fully functional without the extension: renego.oracle falls
back to the pure-Python tree walker at import time. Building the extension
just makes the enumeration sweeps a lot faster.
"""
import os
import sys

from setuptools import Extension, setup

ext_modules = []
try:
    if not os.path.exists("src/renego/oracle/_treecore.pyx"):
        raise ImportError("kernel source not present")
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "renego.oracle._treecore",
                ["src/renego/oracle/_treecore.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    print("Cython not available; building renego without the compiled kernel",
          file=sys.stderr)

setup(ext_modules=ext_modules)
