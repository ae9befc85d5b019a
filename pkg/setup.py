"""Build hook for the optional compiled kernels.

The package works without them; ``intspec.kernels`` falls back to NumPy when
``intspec._ckernels`` cannot be imported.
"""
from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension
except ImportError:  # no Cython/NumPy at build time: pure-Python install
    pass
else:
    ext_modules = cythonize(
        [
            Extension(
                "intspec._ckernels",
                ["src/intspec/_ckernels.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
