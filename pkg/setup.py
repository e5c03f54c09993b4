from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # fallback kernel is used at import time
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "chaincheck._repair_cy",
                ["src/chaincheck/_repair_cy.pyx"],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3", "boundscheck": False, "wraparound": False},
    )

setup(ext_modules=ext_modules)
