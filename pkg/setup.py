from setuptools import Extension, setup
from Cython.Build import cythonize

extensions = [
    Extension(
        "pacedistill._kernels_cy",
        ["src/pacedistill/_kernels_cy.pyx"],
        extra_compile_args=["-O3"],
    )
]

setup(ext_modules=cythonize(extensions, language_level="3"))
