"""Build script for the optional compiled propagation kernel.

The package is fully functional without the extension: the import machinery
in flipflopsim._kernels falls back to a pure-numpy stepper if the compiled
module is missing.
"""

import numpy
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "flipflopsim._kernels._stepper",
        ["src/flipflopsim/_kernels/_stepper.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]

setup(ext_modules=cythonize(extensions, language_level="3"))
