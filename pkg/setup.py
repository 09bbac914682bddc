"""Build the optional compiled flow kernel.

The extension is optional: when Cython or a compiler is unavailable the
package installs without it and falls back to the scipy integrator.
"""

import os

from setuptools import setup

ext_modules = []
if os.environ.get("DICKECHAOS_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [Extension("dickechaos.classical._flow", ["src/dickechaos/classical/_flow.pyx"],
                       extra_compile_args=["-O3"])],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
