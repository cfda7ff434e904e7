import os

from setuptools import Extension, setup

# The compiled rollout kernel is optional: without Cython (or with
# FFSRPLAN_NO_EXT=1) the package installs pure-Python and selects the
# numpy fallback at import time.
ext_modules = []
if not os.environ.get("FFSRPLAN_NO_EXT"):
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "ffsrplan._rollout_cy",
                    sources=["src/ffsrplan/_rollout_cy.pyx"],
                    include_dirs=[numpy.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={
                "language_level": 3,
                "boundscheck": False,
                "wraparound": False,
                "initializedcheck": False,
                "cdivision": True,
            },
        )

setup(ext_modules=ext_modules)
