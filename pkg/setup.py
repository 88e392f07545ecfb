from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "torsionscope._reduction_ext",
                ["src/torsionscope/_reduction_ext.pyx"],
                language="c++",
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except ImportError:
    # The compiled kernel is optional; _kernels falls back to the pure-Python
    # implementation when the extension is absent.
    extensions = []

setup(ext_modules=extensions)
