"""Build script for the optional compiled convolution kernels.

The package is fully functional without the extension (a numpy fallback is
selected at import time); building it just makes the training hot loops
independent of BLAS threading.  `python setup.py build_ext --inplace` builds
in-tree for development checkouts.
"""

from setuptools import Extension, setup

try:
    import numpy as np
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

extensions = []
if cythonize is not None:
    extensions = cythonize(
        [
            Extension(
                "afibkit.nn_core._kernels_cy",
                ["src/afibkit/nn_core/_kernels_cy.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3", "-fopenmp"],
                extra_link_args=["-fopenmp"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=extensions)
