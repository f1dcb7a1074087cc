import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "ptychokit._kernels._native",
        ["src/ptychokit/_kernels/_native.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        # bitwise parity with the numpy fallback requires plain rounded
        # multiplies and adds, so keep the compiler from fusing them
        extra_compile_args=["-ffp-contract=off"],
    )
]

setup(ext_modules=cythonize(extensions, language_level=3))
