"""Build script: compiles the optional Cython kernel extension.

The package works without the extension (a NumPy fallback is selected at
import time), so the extension is marked optional and any build failure is
non-fatal.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "classcount._kernels_cy",
                ["src/classcount/_kernels_cy.pyx"],
                language="c++",
                # keep arithmetic bit-identical to the NumPy fallback:
                # no FMA contraction, no fast-math
                extra_compile_args=["-O3", "-ffp-contract=off"],
                optional=True,
            )
        ],
        language_level="3",
    )

setup(ext_modules=ext_modules)
