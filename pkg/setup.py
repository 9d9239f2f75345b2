"""Builds the optional Cython kernels; the package still installs without them."""
from setuptools import setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [Extension("creditnet._ckernels", ["src/creditnet/_ckernels.pyx"], include_dirs=[np.get_include()])],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
