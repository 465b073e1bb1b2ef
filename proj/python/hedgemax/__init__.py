"""Python face of the epsilon-minimax solver.

Everything lives in the compiled module; this wrapper only makes the package
importable both from an installed wheel and from a build tree on PYTHONPATH.
"""

try:
    from ._core import *  # noqa: F401,F403
except ImportError:  # build tree: the module sits next to the package
    from _core import *  # noqa: F401,F403

__version__ = "0.1.0"
