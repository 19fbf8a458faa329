"""Build script. The compiled detector kernel is optional: if Cython or a C
compiler is unavailable the package installs pure-Python and selects the
numpy fallback at import time."""

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "switchrl.cpd._kernel_cy",
                ["src/switchrl/cpd/_kernel_cy.pyx"],
                optional=True,
            ),
            Extension(
                "switchrl._evi_cy",
                ["src/switchrl/_evi_cy.pyx"],
                optional=True,
            ),
        ],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
