"""Build hook for the optional compiled kernels.

The package is fully functional without the extension (a numpy fallback
is selected at import); the build is marked optional so environments
without Cython or a C toolchain still install cleanly.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "masscert._kernels.ckernels",
                ["src/masscert/_kernels/ckernels.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
