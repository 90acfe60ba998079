"""Build hook for the optional compiled kernels.

Without Cython or a C compiler the package still installs and runs on the
pure-Python kernels.
"""

from __future__ import annotations

from setuptools import Extension, setup

ext = [Extension("nelson_topos._kernels", ["src/nelson_topos/_kernels.pyx"], optional=True)]
try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(ext, language_level=3, quiet=True)

setup(ext_modules=ext_modules)
