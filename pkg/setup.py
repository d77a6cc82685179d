from setuptools import Extension, setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [Extension("dirichletlab._fastdcov", ["src/dirichletlab/_fastdcov.pyx"])],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    # No Cython: install the pure-Python package; the slow kernel is
    # selected automatically at import time.
    pass

setup(ext_modules=ext_modules)
