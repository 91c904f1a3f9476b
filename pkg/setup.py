import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("DUALRATE_NCS_PURE", "") not in ("1", "true", "yes"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "dualrate_ncs._core",
                    ["src/dualrate_ncs/_core.pyx"],
                    # traces must match the pure-Python fallback bit for bit
                    extra_compile_args=["-O2", "-ffp-contract=off", "-fno-fast-math"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
